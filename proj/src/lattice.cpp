#include "mcslab/lattice.hpp"

#include <cstring>

namespace mcs {

namespace {
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace

std::uint64_t TorusLattice::hash() const {
  const double v[4] = {a1.x, a1.y, a2.x, a2.y};
  return fnv1a(v, sizeof v, 14695981039346656037ull);
}

TorusLattice square_lattice(double period) {
  return TorusLattice{{period, 0.0}, {0.0, period}};
}

void VortexSet::validate(const TorusLattice& lat) const {
  if (points.size() != multiplicities.size())
    throw ConfigInvalid("vortex point/multiplicity count mismatch");
  if (total() < 1) throw ConfigInvalid("vortex set must have total multiplicity >= 1");
  for (int m : multiplicities)
    if (m < 1) throw ConfigInvalid("vortex multiplicities must be positive");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (lat.dist(lat.to_xy(points[i]), lat.to_xy(points[j])) < 1e-12)
        throw ConfigInvalid("vortex points must be pairwise distinct modulo the lattice");
}

}  // namespace mcs
