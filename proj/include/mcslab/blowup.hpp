#pragma once

#include <array>
#include <memory>
#include <vector>

#include "mcslab/elliptic.hpp"
#include "mcslab/radial.hpp"

namespace mcs {

enum class BlowupKind { RegularPoint, VortexPoint };

// Glued approximate solution: the scaled entire profile inside the disk of
// radius d around the blow-up location, matched C^1 at the interface to a
// Green's-function far field.  theta is solved from the exact matching of
// the normal derivative; the asymptotic value from the fitted a1 is kept for
// comparison.
struct ApproxSolution {
  BlowupKind kind = BlowupKind::RegularPoint;
  Vec2 q;  // lattice coordinates (vortex kind: the first vortex point)
  double lambda = 0.0, mu = 0.0;
  double d = 0.0;
  double theta = 0.0;
  double theta_asym = 0.0;
  double c_lambda = 0.0;  // vortex kind only
  std::shared_ptr<const RadialProfile> profile;

  Field U;
  Field lapU;       // piecewise-analytic Laplacian of U
  Field EU;         // e^{U + u0}
  Field f_core;     // lambda^2 f(w_scaled) restricted to B_2d   (linearization)
  Field F_core;     // lambda^2 F(w_scaled) restricted to B_d
  std::vector<char> in_d, in_2d;

  double interface_jump_value = 0.0;  // sup |[U]| on |y-q| = d
  double interface_jump_deriv = 0.0;  // sup |[dU/dr]|

  double total_multiplicity = 0.0;
};

struct CorrectionPair {
  Field phi, S;
  double phi_sup = 0.0, phi_X = 0.0;
  double S_l2 = 0.0, S_sup = 0.0, S_w22 = 0.0;
  double alpha = 0.25;
  double composite_norm = 0.0;  // the section-specific ||(phi,S)||
};

struct WeightedNorms {
  double X = 0.0, Y = 0.0;
};

struct KernelElements {
  Field W1, W2, Z1, Z2;
  std::array<double, 4> gram{};  // int W_i Z_j, row-major
};

struct ResidualReport {
  Field g1, g2;
  double g1_Y = 0.0;
  double g2_L2 = 0.0;
};

struct FixedPointStep {
  CorrectionPair next;
  std::array<double, 2> c{};   // multipliers of Z_{q,j} in the projected solve
  bool ball_exit = false;
  double ball_bound = 0.0;
  int linear_iters = 0;
};

struct FixedPointRun {
  CorrectionPair fixed_point;
  std::array<double, 2> c{};
  bool converged = false;
  bool diverged = false;
  int steps = 0;
  double final_change = 0.0;
  double contraction = 0.0;  // max step-to-step contraction ratio observed
  bool ball_exit = false;
  double relaxation = 1.0;
};

ApproxSolution build_approx(const McsSystem& sys, BlowupKind kind, double lambda, double mu,
                            Vec2 q_lattice, double d,
                            std::shared_ptr<const RadialProfile> profile);

WeightedNorms weighted_norms(const McsSystem& sys, const Field& f, Vec2 q_lattice,
                             double lambda, double d, double alpha);

CorrectionPair make_pair(const McsSystem& sys, const ApproxSolution& a, Field phi, Field S,
                         double alpha);
CorrectionPair zero_pair(const McsSystem& sys, const ApproxSolution& a, double alpha = 0.25);

// every displayed term of the first/second residuals at the given correction
ResidualReport residuals(const McsSystem& sys, const ApproxSolution& a,
                         const CorrectionPair& pair);

KernelElements kernel_elements(const McsSystem& sys, const ApproxSolution& a);

struct Projection {
  Field projected;
  std::array<double, 2> c{};
};
Projection project_Q(const McsSystem& sys, const Field& f, const KernelElements& kernel);

FixedPointStep fixed_point_step(const McsSystem& sys, const ApproxSolution& a,
                                const CorrectionPair& pair, const KernelElements* kernel);

FixedPointRun fixed_point_solve(const McsSystem& sys, const ApproxSolution& a,
                                const KernelElements* kernel, int max_steps = 100,
                                double tol = 1e-10, double alpha = 0.25,
                                double relaxation = 1.0);

struct ReducedGradient {
  std::array<double, 2> value{};     // int (L1 phi - g1) W_j
  std::array<double, 2> estimate{};  // a0 * grad u0(q)
  double a0 = 0.0;                   // int F(w) over the plane = 2 pi beta
  double a0_quadrature = 0.0;        // grid quadrature cross-check
};
ReducedGradient reduced_gradient(const McsSystem& sys, const ApproxSolution& a,
                                 const CorrectionPair& pair, const KernelElements& kernel);

// reassemble the (v, N) fields encoded by the ansatz plus correction
std::pair<Field, Field> reassemble(const McsSystem& sys, const ApproxSolution& a,
                                   const CorrectionPair& pair);

}  // namespace mcs
