#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mcslab/fft.hpp"
#include "mcslab/green.hpp"
#include "mcslab/grid.hpp"
#include "mcslab/solvers.hpp"

namespace mcs {

struct SolverParams {
  double newton_tol = 1e-10;  // residual sup-norm target (lambda^2-scaled eqn 1)
  int max_iters = 60;
  double damping = 1.0;       // initial line-search factor
  int continuation_steps = 6; // bisections allowed per failed path step
  GmresOptions gmres{40, 4000, 1e-11};

  bool valid() const { return newton_tol > 0 && damping > 0 && damping <= 1.0; }
};

struct McsState {
  Field v;  // regular part of u = v + u0
  Field N;
  double lambda = 0.0, mu = 0.0;
  VortexSet vortices;
  double residual_norm = 0.0;
  int newton_iters = 0;
  // recorded at acceptance of the state
  double mass = 0.0;            // int lambda^2 e^u (1 - N/lambda)
  double balance_lhs = 0.0;     // int (1 + (lambda/mu) e^u) N/lambda
  double balance_rhs = 0.0;     // int (1 + lambda/mu) e^u
  double max_u = 0.0;           // over off-vortex grid points
  double min_nhat = 0.0, max_nhat = 0.0;  // bounds of N/lambda
};

// Shared immutable context: lattice + vortex set + grid resolution, with the
// background grids sampled once.
class McsSystem {
 public:
  McsSystem(const TorusLattice& lat, const VortexSet& vs, int n);

  const TorusLattice& lattice() const { return lat_; }
  const VortexSet& vortices() const { return vs_; }
  const Background& background() const { return bg_; }
  const Spectral& spectral() const { return sp_; }
  int n() const { return n_; }
  const Field& exp_u0() const { return E0_; }      // e^{u0}, zero at vortex points
  const Field& u0_smooth() const { return u0hat_; } // u0 - sum 2 m_i ln(rho_i): the gamma part
  double source_const() const { return c0_; }      // 4 pi M / |Omega|
  int total_multiplicity() const { return vs_.total(); }

  Field exp_u(const Field& v) const;  // e^{v + u0} on the grid
  Field u_field(const Field& v) const;  // v + u0 (large negative at poles)

  // seed for the topological branch: e^u mollified to min(1, core profile)
  std::pair<Field, Field> topological_init(double lambda, double mu) const;
  double seed_mass(double lambda, const std::pair<Field, Field>& seed) const;

  Field cs_newton(double lambda, const Field& init, const SolverParams& params) const;
  McsState mcs_newton(double lambda, double mu, const std::pair<Field, Field>& init,
                      const SolverParams& params) const;

  std::vector<McsState> continuation(const std::vector<std::pair<double, double>>& path,
                                     const SolverParams& params,
                                     std::optional<std::pair<Field, Field>> init = {}) const;

  // residual fields of the discrete system at (v, N); used by tests and the
  // blow-up reassembly check
  std::pair<Field, Field> residual(double lambda, double mu, const Field& v,
                                   const Field& N) const;

 private:
  void fill_state_metadata(McsState& st) const;

  TorusLattice lat_;
  VortexSet vs_;
  int n_;
  Background bg_;
  Spectral sp_;
  Field E0_, u0hat_;
  double c0_;
};

}  // namespace mcs
