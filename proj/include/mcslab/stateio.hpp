#pragma once

#include <string>

#include "mcslab/elliptic.hpp"

namespace mcs {

// Binary state container: one JSON header line (lattice, vortices, lambda,
// mu, grid size, convergence metadata) followed by the raw v and N grids.
void save_state(const McsState& st, const TorusLattice& lat, const std::string& path);

struct LoadedState {
  TorusLattice lat;
  McsState state;
};
LoadedState load_state(const std::string& path);

// atomic text write: stage to `path.tmp`, then rename
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace mcs
