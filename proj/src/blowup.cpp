#include "mcslab/blowup.hpp"

#include <algorithm>
#include <cmath>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"

namespace mcs {

namespace {

// quintic transition with two vanishing derivatives at both ends
double cutoff(double r, double d) {
  if (r <= d) return 1.0;
  if (r >= 2.0 * d) return 0.0;
  const double x = (r - d) / d;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}
double cutoff_d1(double r, double d) {
  if (r <= d || r >= 2.0 * d) return 0.0;
  const double x = (r - d) / d;
  return -30.0 * x * x * (1.0 - x) * (1.0 - x) / d;
}
double cutoff_d2(double r, double d) {
  if (r <= d || r >= 2.0 * d) return 0.0;
  const double x = (r - d) / d;
  return -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (d * d);
}

double rho_weight(double z, double alpha) { return std::pow(1.0 + z, 1.0 + alpha / 2.0); }
double rho_bar_weight(double z, double alpha) {
  return 1.0 / ((1.0 + z) * std::pow(std::log(2.0 + z), 1.0 + alpha / 2.0));
}

struct Scratch {
  Field X;  // e^{phi - (lambda/mu) h} (regular) or e^{-(lambda/mu) h} (vortex)
  Field h;  // N / lambda encoded by the ansatz
  Field P;  // the field whose Laplacian enters the second residual
  Field R;  // second residual minus its -Delta P term
};

Scratch second_equation_parts(const ApproxSolution& a, const Field& phi, const Field& S) {
  const std::size_t sz = phi.size();
  const double lambda = a.lambda, mu = a.mu;
  Scratch sc{like(phi), like(phi), like(phi), like(phi)};
  if (a.kind == BlowupKind::RegularPoint) {
    kernels::transform(sc.h.v.data(), sz, [&](std::size_t i) {
      return a.EU.v[i] * (1.0 + phi.v[i]) + S.v[i];
    });
    kernels::transform(sc.X.v.data(), sz, [&](std::size_t i) {
      return std::exp(phi.v[i] - lambda / mu * sc.h.v[i]);
    });
    kernels::transform(sc.P.v.data(), sz,
                       [&](std::size_t i) { return a.EU.v[i] * (1.0 + phi.v[i]); });
    kernels::transform(sc.R.v.data(), sz, [&](std::size_t i) {
      const double E = a.EU.v[i], X = sc.X.v[i];
      return mu * mu * E * (1.0 + phi.v[i] - X) +
             lambda * mu * (E * E * X * (1.0 + phi.v[i]) + (S.v[i] - 1.0) * E * X);
    });
  } else {
    kernels::transform(sc.P.v.data(), sz,
                       [&](std::size_t i) { return a.EU.v[i] * std::exp(phi.v[i]); });
    kernels::transform(sc.h.v.data(), sz,
                       [&](std::size_t i) { return sc.P.v[i] + S.v[i]; });
    kernels::transform(sc.X.v.data(), sz,
                       [&](std::size_t i) { return std::exp(-lambda / mu * sc.h.v[i]); });
    kernels::transform(sc.R.v.data(), sz, [&](std::size_t i) {
      const double Y = sc.P.v[i] * sc.X.v[i];
      return mu * mu * (1.0 + lambda / mu * Y) * (sc.P.v[i] + S.v[i]) - mu * mu * S.v[i] -
             mu * mu * (1.0 + lambda / mu) * Y;
    });
  }
  return sc;
}

Field first_equation_residual(const McsSystem& sys, const ApproxSolution& a, const Field& phi,
                              const Field& S, const Scratch& sc) {
  const std::size_t sz = phi.size();
  const double lambda = a.lambda;
  const double c0 = sys.source_const();
  Field g = like(phi);
  if (a.kind == BlowupKind::RegularPoint) {
    kernels::transform(g.v.data(), sz, [&](std::size_t i) {
      const double E = a.EU.v[i], X = sc.X.v[i], p = phi.v[i], s = S.v[i];
      const double FE = E * (1.0 - E), fE = E * (1.0 - 2.0 * E);
      double out = -a.lapU.v[i] + a.f_core.v[i] * p - lambda * lambda * FE + c0;
      out += -lambda * lambda * fE * p;
      out += lambda * lambda * FE * (1.0 + p - X);
      out += lambda * lambda * E * s;
      out += lambda * lambda * E * (X - 1.0) * (E * p + s);
      return out;
    });
  } else {
    kernels::transform(g.v.data(), sz, [&](std::size_t i) {
      const double Ephi = sc.P.v[i], X5 = sc.X.v[i], p = phi.v[i], s = S.v[i];
      return -a.lapU.v[i] + a.f_core.v[i] * p + c0 -
             lambda * lambda * Ephi * X5 * (1.0 - Ephi - s);
    });
  }
  return g;
}

}  // namespace

ApproxSolution build_approx(const McsSystem& sys, BlowupKind kind, double lambda, double mu,
                            Vec2 q_lattice, double d,
                            std::shared_ptr<const RadialProfile> profile) {
  const TorusLattice& lat = sys.lattice();
  const int n = sys.n();
  const int M = sys.total_multiplicity();
  if (!profile || profile->empty()) throw ConfigInvalid("build_approx needs a profile");
  if (kind == BlowupKind::RegularPoint) {
    if (M <= 2) throw ConfigInvalid("regular-point construction needs total multiplicity > 2");
    if (profile->m != 0) throw ProfileMismatch("regular-point ansatz uses the m = 0 profile");
  } else {
    if (M <= 4) throw ConfigInvalid("vortex-point construction needs total multiplicity > 4");
    if (profile->m != 1) throw ProfileMismatch("vortex-point ansatz uses the m = 1 profile");
  }
  if (std::fabs(profile->beta - 2.0 * M) > 1e-4)
    throw ProfileMismatch("profile beta " + std::to_string(profile->beta) +
                          " does not match 2M = " + std::to_string(2 * M));
  if (2.0 * d > lat.injectivity_radius() + 1e-12)
    throw ConfigInvalid("gluing radius too large for the lattice");
  if (profile->r_max < 2.0 * d * lambda)
    throw TruncationTooSmall("profile truncation below the scaled gluing radius");

  ApproxSolution a;
  a.kind = kind;
  a.q = q_lattice;
  a.lambda = lambda;
  a.mu = mu;
  a.d = d;
  a.profile = profile;
  a.total_multiplicity = M;

  const Background& bg = sys.background();
  const Vec2 qxy = lat.to_xy(q_lattice);
  std::size_t p1_index = 0;
  if (kind == BlowupKind::VortexPoint) {
    bool found = false;
    for (std::size_t k = 0; k < sys.vortices().size(); ++k)
      if (lat.dist(qxy, bg.vortex_xy(k)) < 1e-9) {
        p1_index = k;
        found = true;
      }
    if (!found) throw ConfigInvalid("vortex-point ansatz must be centered on a vortex");
    if (sys.vortices().multiplicities[p1_index] != 1)
      throw ConfigInvalid("vortex-point ansatz assumes multiplicity one at the center");
  } else if (bg.dist_to_nearest_vortex(qxy) < 1e-6) {
    throw ConfigInvalid("regular-point ansatz cannot sit on a vortex");
  }

  // the value is continuous across the interface for any theta; the normal
  // derivative fixes it through r w'(r) at r = d lambda
  const double t_d = d * lambda;
  const double wp = profile->deriv(t_d);
  a.theta = 1.0 + d * lambda * wp / (2.0 * M);
  const double pw = profile->decay_power();
  a.theta_asym = profile->a1 * pw / (2.0 * M * std::pow(t_d, pw));
  if (std::fabs(lambda * wp + 2.0 * M * (1.0 - a.theta) / d) >
      1e-8 * std::max(1.0, std::fabs(lambda * wp)))
    throw MatchFailure("no theta removes the normal-derivative jump");
  if (kind == BlowupKind::VortexPoint)
    a.c_lambda = 2.0 * std::log(lambda) - bg.hat_eval(qxy, p1_index);

  const double gq = bg.green().robin();  // gamma(q,q) on the flat torus
  const double shift =
      kind == BlowupKind::RegularPoint ? -bg.eval(qxy) : a.c_lambda;
  const double fourPiM = 4.0 * M_PI * M;
  const double c0 = sys.source_const();
  const double w_d = profile->value(t_d);

  a.U = Field(lat, n);
  a.lapU = Field(lat, n);
  a.EU = Field(lat, n);
  a.f_core = Field(lat, n);
  a.F_core = Field(lat, n);
  a.in_d.assign((std::size_t)n * n, 0);
  a.in_2d.assign((std::size_t)n * n, 0);

  kernels::fill(a.U.v.data(), a.U.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const Vec2 x = a.U.point(i, j);
    const double r = lat.dist(x, qxy);
    if (r <= d)
      return profile->value(lambda * r) + shift +
             fourPiM * (bg.green().gamma(x, qxy) - gq) * (1.0 - a.theta);
    return w_d + shift +
           fourPiM * (bg.green().eval(x, qxy) - gq + std::log(d) / (2.0 * M_PI)) *
               (1.0 - a.theta);
  });
  kernels::fill(a.lapU.v.data(), a.lapU.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const double r = lat.dist(a.lapU.point(i, j), qxy);
    if (r <= d) {
      const double sig = profile->sigma(lambda * r);
      return -lambda * lambda * sig * (1.0 - sig) + c0 * (1.0 - a.theta);
    }
    return c0 * (1.0 - a.theta);
  });
  kernels::fill(a.EU.v.data(), a.EU.v.size(), [&](std::size_t idx) {
    return std::exp(a.U.v[idx]) * sys.exp_u0().v[idx];
  });
  kernels::fill(a.f_core.v.data(), a.f_core.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const double r = lat.dist(a.f_core.point(i, j), qxy);
    if (r >= 2.0 * d) return 0.0;
    const double sig = profile->sigma(lambda * r);
    return lambda * lambda * sig * (1.0 - 2.0 * sig);
  });
  kernels::fill(a.F_core.v.data(), a.F_core.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const double r = lat.dist(a.F_core.point(i, j), qxy);
    if (r >= 2.0 * d) return 0.0;
    const double sig = profile->sigma(lambda * r);
    return lambda * lambda * sig * (1.0 - sig);
  });
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = lat.dist(a.U.point(i, j), qxy);
      a.in_d[(std::size_t)i * n + j] = r <= d ? 1 : 0;
      a.in_2d[(std::size_t)i * n + j] = r < 2.0 * d ? 1 : 0;
    }

  // numerical C^1 check on |y - q| = d, evaluating both branch formulas
  double jv = 0.0, jd = 0.0;
  const int ntheta = 256;
  for (int k = 0; k < ntheta; ++k) {
    const double th = 2.0 * M_PI * k / ntheta;
    const Vec2 dir{std::cos(th), std::sin(th)};
    const Vec2 x{qxy.x + d * dir.x, qxy.y + d * dir.y};
    const double Uin = profile->value(t_d) + shift +
                       fourPiM * (bg.green().gamma(x, qxy) - gq) * (1.0 - a.theta);
    const double Uout =
        w_d + shift +
        fourPiM * (bg.green().eval(x, qxy) - gq + std::log(d) / (2.0 * M_PI)) * (1.0 - a.theta);
    jv = std::max(jv, std::fabs(Uin - Uout));
    const Vec2 ggam = bg.green().gamma_grad(x, qxy);
    const Vec2 gG = bg.green().grad(x, qxy);
    const double din =
        lambda * wp + fourPiM * (1.0 - a.theta) * (dir.x * ggam.x + dir.y * ggam.y);
    const double dout = fourPiM * (1.0 - a.theta) * (dir.x * gG.x + dir.y * gG.y);
    jd = std::max(jd, std::fabs(din - dout));
  }
  a.interface_jump_value = jv;
  a.interface_jump_deriv = jd;
  return a;
}

WeightedNorms weighted_norms(const McsSystem& sys, const Field& f, Vec2 q_lattice,
                             double lambda, double d, double alpha) {
  const TorusLattice& lat = sys.lattice();
  const int n = sys.n();
  const Vec2 qxy = lat.to_xy(q_lattice);
  const Field lap = sys.spectral().laplacian(f);
  const double cell = lat.area() / ((double)n * n);
  double x1 = 0, x2 = 0, x3 = 0, y1 = 0, y2 = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = (std::size_t)i * n + j;
      const double r = lat.dist(f.point(i, j), qxy);
      const double fv = f.v[idx], lv = lap.v[idx];
      if (r < 2.0 * d) {
        const double z = lambda * r;
        const double rho = rho_weight(z, alpha), rob = rho_bar_weight(z, alpha);
        x1 += lv * lv * rho * rho;
        x2 += fv * fv * rob * rob;
        y1 += fv * fv * rho * rho;
      }
      if (r > d) {
        x3 += lv * lv + fv * fv;
        y2 += fv * fv;
      }
    }
  WeightedNorms out;
  out.X = std::sqrt(x1 * cell / (lambda * lambda) + x2 * cell * lambda * lambda + x3 * cell);
  out.Y = std::sqrt(y1 * cell / (lambda * lambda) + y2 * cell);
  return out;
}

CorrectionPair make_pair(const McsSystem& sys, const ApproxSolution& a, Field phi, Field S,
                         double alpha) {
  CorrectionPair p;
  p.alpha = alpha;
  p.phi_sup = phi.sup_norm();
  p.phi_X = weighted_norms(sys, phi, a.q, a.lambda, a.d, alpha).X;
  p.S_l2 = S.l2_norm();
  p.S_sup = S.sup_norm();
  {
    const Spectral& sp = sys.spectral();
    Field sx, sy, sxx, sxy, syx, syy;
    sp.gradient(S, sx, sy);
    sp.gradient(sx, sxx, sxy);
    sp.gradient(sy, syx, syy);
    const double g2 = sx.l2_norm() * sx.l2_norm() + sy.l2_norm() * sy.l2_norm();
    const double h2 = sxx.l2_norm() * sxx.l2_norm() + 2.0 * sxy.l2_norm() * sxy.l2_norm() +
                      syy.l2_norm() * syy.l2_norm();
    p.S_w22 = std::sqrt(p.S_l2 * p.S_l2 + g2 + h2);
  }
  const double lnl = std::log(a.lambda);
  const double mu2 = a.mu * a.mu;
  const double sblock = mu2 * p.S_l2 + a.mu * p.S_sup + p.S_w22;
  if (a.kind == BlowupKind::RegularPoint)
    p.composite_norm = p.phi_sup + p.phi_X + lnl * lnl / mu2 * sblock;
  else
    p.composite_norm = p.phi_sup + p.phi_X + a.lambda / (mu2 * lnl * lnl * lnl) * sblock;
  p.phi = std::move(phi);
  p.S = std::move(S);
  return p;
}

CorrectionPair zero_pair(const McsSystem& sys, const ApproxSolution& a, double alpha) {
  return make_pair(sys, a, Field(sys.lattice(), sys.n()), Field(sys.lattice(), sys.n()), alpha);
}

ResidualReport residuals(const McsSystem& sys, const ApproxSolution& a,
                         const CorrectionPair& pair) {
  ResidualReport rep;
  const Scratch sc = second_equation_parts(a, pair.phi, pair.S);
  rep.g1 = first_equation_residual(sys, a, pair.phi, pair.S, sc);
  rep.g2 = sys.spectral().laplacian(sc.P);
  kernels::transform(rep.g2.v.data(), rep.g2.v.size(),
                     [&](std::size_t i) { return -rep.g2.v[i] + sc.R.v[i]; });
  rep.g1_Y = weighted_norms(sys, rep.g1, a.q, a.lambda, a.d, pair.alpha).Y;
  rep.g2_L2 = rep.g2.l2_norm();
  return rep;
}

KernelElements kernel_elements(const McsSystem& sys, const ApproxSolution& a) {
  if (a.kind != BlowupKind::RegularPoint)
    throw ConfigInvalid("kernel elements belong to the regular-point linearization");
  const TorusLattice& lat = sys.lattice();
  const int n = sys.n();
  const Vec2 qxy = lat.to_xy(a.q);
  const double lambda = a.lambda, d = a.d;
  const RadialProfile& p = *a.profile;
  KernelElements k{Field(lat, n), Field(lat, n), Field(lat, n), Field(lat, n), {}};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = (std::size_t)i * n + j;
      const Vec2 s = lat.min_image(k.W1.point(i, j) - qxy);
      const double r = s.norm();
      if (r >= 2.0 * d || r < 1e-14) continue;
      const double t = lambda * r;
      const double wp = p.deriv(t);
      const double sig = p.sigma(t);
      const double F = sig * (1.0 - sig);
      const double wpp = -wp / t - F;  // from the profile equation
      const double chi = cutoff(r, d), chi1 = cutoff_d1(r, d), chi2 = cutoff_d2(r, d);
      const Vec2 nvec = s * (1.0 / r);
      // W_j = chi psi_j with psi_j = -lambda w'(t) n_j; since psi_j solves the
      // entire linearization, Z_j collapses to cutoff terms plus 2 lambda^2 F W_j
      const double psi_base = -lambda * wp;
      const double zsc = 2.0 * lambda * lambda * F * chi * psi_base +
                         2.0 * lambda * lambda * chi1 * wpp - psi_base * (chi2 + chi1 / r);
      k.W1.v[idx] = chi * psi_base * nvec.x;
      k.W2.v[idx] = chi * psi_base * nvec.y;
      k.Z1.v[idx] = zsc * nvec.x;
      k.Z2.v[idx] = zsc * nvec.y;
    }
  const double cell = lat.area() / ((double)n * n);
  k.gram[0] = kernels::dot(k.W1.v, k.Z1.v) * cell;
  k.gram[1] = kernels::dot(k.W1.v, k.Z2.v) * cell;
  k.gram[2] = kernels::dot(k.W2.v, k.Z1.v) * cell;
  k.gram[3] = kernels::dot(k.W2.v, k.Z2.v) * cell;
  return k;
}

Projection project_Q(const McsSystem& sys, const Field& f, const KernelElements& kernel) {
  const double cell = sys.lattice().area() / ((double)sys.n() * sys.n());
  const double b1 = kernels::dot(kernel.W1.v, f.v) * cell;
  const double b2 = kernels::dot(kernel.W2.v, f.v) * cell;
  const double det = kernel.gram[0] * kernel.gram[3] - kernel.gram[1] * kernel.gram[2];
  const double scale = std::fabs(kernel.gram[0]) + std::fabs(kernel.gram[3]);
  if (std::fabs(det) < 1e-12 * scale * scale)
    throw SingularGram("W-Z gram matrix is singular");
  Projection pr;
  pr.c[0] = (b1 * kernel.gram[3] - b2 * kernel.gram[1]) / det;
  pr.c[1] = (kernel.gram[0] * b2 - kernel.gram[2] * b1) / det;
  pr.projected = f;
  kernels::transform(pr.projected.v.data(), pr.projected.v.size(), [&](std::size_t i) {
    return f.v[i] - pr.c[0] * kernel.Z1.v[i] - pr.c[1] * kernel.Z2.v[i];
  });
  return pr;
}

FixedPointStep fixed_point_step(const McsSystem& sys, const ApproxSolution& a,
                                const CorrectionPair& pair, const KernelElements* kernel) {
  if (a.kind == BlowupKind::RegularPoint && kernel == nullptr)
    throw ConfigInvalid("regular-point step needs the kernel elements");
  const Spectral& sp = sys.spectral();
  const std::size_t sz = pair.phi.size();
  const double mu = a.mu, lambda = a.lambda;

  // S-half of the map: (Delta - mu^2) S_new = g2(phi, S).  With T solving
  // (Delta - mu^2) T = R - mu^2 P one has S_new = T - P exactly, and the
  // Laplacian of the glued field P is never formed.
  const Scratch sc = second_equation_parts(a, pair.phi, pair.S);
  Field rhsT = like(pair.phi);
  kernels::transform(rhsT.v.data(), sz,
                     [&](std::size_t i) { return sc.R.v[i] - mu * mu * sc.P.v[i]; });
  Field Snew = sp.helmholtz_solve(mu, rhsT).S;
  kernels::axpby(-1.0, sc.P.v.data(), 1.0, Snew.v.data(), sz);

  // phi-half: (projected) linear solve against the first residual at (phi, S_new)
  const Scratch sc2 = second_equation_parts(a, pair.phi, Snew);
  const Field g1 = first_equation_residual(sys, a, pair.phi, Snew, sc2);
  if (!std::isfinite(g1.sup_norm()))
    throw LinearSolveFailure("first residual overflowed; iterate far outside the ball");

  auto lap_plus_core = [&](const Field& x) {
    Field y = sp.laplacian(x);
    kernels::transform(y.v.data(), sz,
                       [&](std::size_t i) { return y.v[i] + a.f_core.v[i] * x.v[i]; });
    return y;
  };

  FixedPointStep out;
  Field phi_new(sys.lattice(), sys.n());
  const double cell = sys.lattice().area() / ((double)sz);
  GmresOptions lopts{40, 6000, 1e-11};

  if (a.kind == BlowupKind::RegularPoint) {
    // bordered system: L1 phi - c_j Z_j = g1 with the two moment constraints
    const double zn1 = std::sqrt(kernels::dot(kernel->Z1.v, kernel->Z1.v) * cell);
    const double zn2 = std::sqrt(kernels::dot(kernel->Z2.v, kernel->Z2.v) * cell);
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(sys.lattice(), sys.n());
      std::copy(x.begin(), x.begin() + sz, xf.v.begin());
      const double c1 = x[sz], c2 = x[sz + 1];
      Field Lx = lap_plus_core(xf);
      y.resize(sz + 2);
      kernels::transform(y.data(), sz, [&](std::size_t i) {
        return Lx.v[i] - c1 * kernel->Z1.v[i] / zn1 - c2 * kernel->Z2.v[i] / zn2;
      });
      y[sz] = kernels::dot(kernel->Z1.v.data(), x.data(), sz) * cell / zn1;
      y[sz + 1] = kernels::dot(kernel->Z2.v.data(), x.data(), sz) * cell / zn2;
    };
    auto precond = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(sys.lattice(), sys.n());
      std::copy(x.begin(), x.begin() + sz, xf.v.begin());
      Field s = sp.helmholtz_solve(0.6 * lambda, xf).S;
      y.resize(sz + 2);
      std::copy(s.v.begin(), s.v.end(), y.begin());
      y[sz] = x[sz];
      y[sz + 1] = x[sz + 1];
    };
    std::vector<double> rhs(sz + 2, 0.0), sol(sz + 2, 0.0);
    std::copy(g1.v.begin(), g1.v.end(), rhs.begin());
    std::copy(pair.phi.v.begin(), pair.phi.v.end(), sol.begin());  // warm start
    const GmresResult lin = gmres(apply, precond, rhs, sol, lopts);
    if (!lin.converged && lin.residual > 1e-8)
      throw LinearSolveFailure("projected linear solve stalled at residual " +
                               std::to_string(lin.residual));
    std::copy(sol.begin(), sol.begin() + sz, phi_new.v.begin());
    out.c = {sol[sz] / zn1, sol[sz + 1] / zn2};
    out.linear_iters = lin.iters;
  } else {
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(sys.lattice(), sys.n());
      xf.v = x;
      y = lap_plus_core(xf).v;
    };
    auto precond = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(sys.lattice(), sys.n());
      xf.v = x;
      y = sp.helmholtz_solve(0.6 * lambda, xf).S.v;
    };
    std::vector<double> sol = pair.phi.v;
    const GmresResult lin = gmres(apply, precond, g1.v, sol, lopts);
    if (!lin.converged && lin.residual > 1e-8)
      throw LinearSolveFailure("vortex linear solve stalled at residual " +
                               std::to_string(lin.residual));
    phi_new.v = sol;
    out.linear_iters = lin.iters;
  }

  out.next = make_pair(sys, a, std::move(phi_new), std::move(Snew), pair.alpha);
  const double lnl = std::log(lambda);
  out.ball_bound =
      a.kind == BlowupKind::RegularPoint ? lnl * lnl / lambda : 1.0 / (lnl * lnl * lnl);
  out.ball_exit = out.next.composite_norm > out.ball_bound;
  return out;
}

FixedPointRun fixed_point_solve(const McsSystem& sys, const ApproxSolution& a,
                                const KernelElements* kernel, int max_steps, double tol,
                                double alpha, double relaxation) {
  FixedPointRun run;
  run.relaxation = relaxation;
  CorrectionPair cur = zero_pair(sys, a, alpha);
  double prev_change = 0.0;
  const double lnl = std::log(a.lambda);
  const double ball =
      a.kind == BlowupKind::RegularPoint ? lnl * lnl / a.lambda : 1.0 / (lnl * lnl * lnl);
  for (int k = 0; k < max_steps; ++k) {
    FixedPointStep st;
    try {
      st = fixed_point_step(sys, a, cur, kernel);
    } catch (const LinearSolveFailure&) {
      run.diverged = true;  // iterate left the solvable neighborhood
      break;
    }
    if (relaxation != 1.0) {
      // under-relaxed update keeps the same fixed points of the map
      kernels::transform(st.next.phi.v.data(), st.next.phi.v.size(), [&](std::size_t i) {
        return (1.0 - relaxation) * cur.phi.v[i] + relaxation * st.next.phi.v[i];
      });
      kernels::transform(st.next.S.v.data(), st.next.S.v.size(), [&](std::size_t i) {
        return (1.0 - relaxation) * cur.S.v[i] + relaxation * st.next.S.v[i];
      });
      st.next = make_pair(sys, a, std::move(st.next.phi), std::move(st.next.S), alpha);
    }
    Field dphi = st.next.phi, dS = st.next.S;
    kernels::axpby(-1.0, cur.phi.v.data(), 1.0, dphi.v.data(), dphi.v.size());
    kernels::axpby(-1.0, cur.S.v.data(), 1.0, dS.v.data(), dS.v.size());
    const double change =
        make_pair(sys, a, std::move(dphi), std::move(dS), alpha).composite_norm;
    run.ball_exit = run.ball_exit || st.ball_exit;
    run.c = st.c;
    cur = std::move(st.next);
    run.steps = k + 1;
    run.final_change = change;
    if (k >= 1 && prev_change > 0.0)
      run.contraction = std::max(run.contraction, change / prev_change);
    prev_change = change;
    if (change < tol) {
      run.converged = true;
      break;
    }
    if (!std::isfinite(change) || cur.composite_norm > 1e4 * std::max(1.0, ball)) {
      run.diverged = true;  // iterates left any reasonable neighborhood
      break;
    }
  }
  run.fixed_point = std::move(cur);
  return run;
}

ReducedGradient reduced_gradient(const McsSystem& sys, const ApproxSolution& a,
                                 const CorrectionPair& pair, const KernelElements& kernel) {
  const std::size_t sz = pair.phi.size();
  const double cell = sys.lattice().area() / ((double)sz);
  const Scratch sc = second_equation_parts(a, pair.phi, pair.S);
  const Field g1 = first_equation_residual(sys, a, pair.phi, pair.S, sc);
  Field L = sys.spectral().laplacian(pair.phi);
  kernels::transform(L.v.data(), sz, [&](std::size_t i) {
    return L.v[i] + a.f_core.v[i] * pair.phi.v[i] - g1.v[i];
  });
  ReducedGradient out;
  out.value[0] = kernels::dot(L.v, kernel.W1.v) * cell;
  out.value[1] = kernels::dot(L.v, kernel.W2.v) * cell;
  out.a0 = 2.0 * M_PI * a.profile->beta;
  out.a0_quadrature = 2.0 * M_PI * a.profile->beta_slope;
  const Vec2 g = sys.background().grad(sys.lattice().to_xy(a.q));
  out.estimate[0] = out.a0 * g.x;
  out.estimate[1] = out.a0 * g.y;
  return out;
}

std::pair<Field, Field> reassemble(const McsSystem& sys, const ApproxSolution& a,
                                   const CorrectionPair& pair) {
  const std::size_t sz = pair.phi.size();
  const Scratch sc = second_equation_parts(a, pair.phi, pair.S);
  Field v = like(pair.phi), N = like(pair.phi);
  // v + N/mu = U + phi with N/lambda = h
  kernels::transform(v.v.data(), sz, [&](std::size_t i) {
    return a.U.v[i] + pair.phi.v[i] - (a.lambda / a.mu) * sc.h.v[i];
  });
  kernels::transform(N.v.data(), sz, [&](std::size_t i) { return a.lambda * sc.h.v[i]; });
  (void)sys;
  return {v, N};
}

}  // namespace mcs
