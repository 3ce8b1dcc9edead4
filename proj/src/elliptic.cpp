#include "mcslab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"

namespace mcs {

namespace {
constexpr double kPoleU0 = -745.0;  // exp underflows to 0 below this

double vortex_core_radius(int m, double lambda) {
  // radius at which the mollified core profile carries the full 4 pi m
  return std::sqrt(2.0 * (2.0 * m + 2.0) * (2.0 * m + 1.0)) / lambda;
}
}  // namespace

McsSystem::McsSystem(const TorusLattice& lat, const VortexSet& vs, int n)
    : lat_(lat), vs_(vs), n_(n), bg_(lat, vs), sp_(lat, n), E0_(lat, n), u0hat_(lat, n) {
  c0_ = 4.0 * M_PI * vs.total() / lat.area();
  kernels::fill(E0_.v.data(), E0_.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n_), j = (int)(idx % n_);
    return bg_.exp_u0(E0_.point(i, j));
  });
  // smooth part: u0 - sum 2 m_i ln rho_i = -4 pi sum m_i gamma(x, p_i)
  kernels::fill(u0hat_.v.data(), u0hat_.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n_), j = (int)(idx % n_);
    const Vec2 x = u0hat_.point(i, j);
    double s = 0.0;
    for (std::size_t k = 0; k < vs_.size(); ++k)
      s += -4.0 * M_PI * vs_.multiplicities[k] * bg_.green().gamma(x, bg_.vortex_xy(k));
    return s;
  });
}

Field McsSystem::exp_u(const Field& v) const {
  Field e = like(v);
  kernels::transform(e.v.data(), e.v.size(),
                     [&](std::size_t i) { return std::exp(v.v[i]) * E0_.v[i]; });
  return e;
}

Field McsSystem::u_field(const Field& v) const {
  Field u = like(v);
  kernels::transform(u.v.data(), u.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n_), j = (int)(idx % n_);
    const Vec2 x = u0hat_.point(i, j);
    double logs = 0.0;
    for (std::size_t k = 0; k < vs_.size(); ++k) {
      const double r = lat_.dist(x, bg_.vortex_xy(k));
      logs += r < 1e-14 ? kPoleU0 : 2.0 * vs_.multiplicities[k] * std::log(r);
    }
    return v.v[idx] + u0hat_.v[idx] + std::max(logs, kPoleU0);
  });
  return u;
}

std::pair<Field, Field> McsSystem::topological_init(double lambda, double mu) const {
  (void)mu;
  Field v(lat_, n_), N(lat_, n_);
  double sep = 1e300;
  for (std::size_t i = 0; i < vs_.size(); ++i)
    for (std::size_t j = i + 1; j < vs_.size(); ++j)
      sep = std::min(sep, lat_.dist(bg_.vortex_xy(i), bg_.vortex_xy(j)));
  const double rcap =
      0.7 * std::min(lat_.injectivity_radius(), sep == 1e300 ? 1e300 : 0.5 * sep);
  std::vector<double> r0(vs_.size());
  for (std::size_t k = 0; k < vs_.size(); ++k)
    r0[k] = std::min(rcap, vortex_core_radius(vs_.multiplicities[k], lambda));
  kernels::fill(v.v.data(), v.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n_), j = (int)(idx % n_);
    const Vec2 x = v.point(i, j);
    double out = -u0hat_.v[idx];
    for (std::size_t k = 0; k < vs_.size(); ++k) {
      const double rho = lat_.dist(x, bg_.vortex_xy(k));
      out += -2.0 * vs_.multiplicities[k] * std::log(std::max(rho, r0[k]));
    }
    return out;
  });
  kernels::fill(N.v.data(), N.v.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n_), j = (int)(idx % n_);
    const Vec2 x = N.point(i, j);
    double p = 1.0;
    for (std::size_t k = 0; k < vs_.size(); ++k) {
      const double rho = lat_.dist(x, bg_.vortex_xy(k));
      if (rho < r0[k]) p *= std::pow(rho / r0[k], 2.0 * vs_.multiplicities[k]);
    }
    return lambda * p;
  });
  return {v, N};
}

double McsSystem::seed_mass(double lambda, const std::pair<Field, Field>& seed) const {
  const Field e = exp_u(seed.first);
  Field dens = like(e);
  kernels::transform(dens.v.data(), dens.v.size(), [&](std::size_t i) {
    return lambda * lambda * e.v[i] * (1.0 - seed.second.v[i] / lambda);
  });
  return dens.integral();
}

Field McsSystem::cs_newton(double lambda, const Field& init, const SolverParams& params) const {
  if (!params.valid()) throw ConfigInvalid("invalid SolverParams");
  Field v = init;
  const std::size_t sz = v.size();
  auto residual_of = [&](const Field& vv) {
    Field e = exp_u(vv);
    Field r = sp_.laplacian(vv);
    kernels::transform(r.v.data(), sz, [&](std::size_t i) {
      return r.v[i] + lambda * lambda * e.v[i] * (1.0 - e.v[i]) - c0_;
    });
    return r;
  };

  double prev_norm = 1e300;
  for (int it = 0; it < params.max_iters; ++it) {
    Field r = residual_of(v);
    const double rn = r.sup_norm();
    if (rn < params.newton_tol * std::max(1.0, lambda * lambda)) {
      Field e = exp_u(v);
      if (kernels::max(e.v.data(), sz) >= 1.0)
        throw InvariantViolation("cs_newton converged with max u >= 0");
      return v;
    }
    if (rn > 0.999 * prev_norm && it > 2)
      throw NewtonStalled("cs_newton residual plateau at " + std::to_string(rn));
    prev_norm = rn;

    const Field e = exp_u(v);
    Field coef = like(v);
    kernels::transform(coef.v.data(), sz, [&](std::size_t i) {
      return lambda * lambda * e.v[i] * (1.0 - 2.0 * e.v[i]);
    });
    // J = Delta + coef; preconditioned by the topological symbol Delta - lambda^2
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(lat_, n_);
      xf.v = x;
      Field lap = sp_.laplacian(xf);
      y.resize(sz);
      kernels::transform(y.data(), sz,
                         [&](std::size_t i) { return lap.v[i] + coef.v[i] * x[i]; });
    };
    auto precond = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field xf(lat_, n_);
      xf.v = x;
      y = sp_.helmholtz_solve(lambda, xf).S.v;
    };
    std::vector<double> rhs(sz), delta;
    kernels::transform(rhs.data(), sz, [&](std::size_t i) { return -r.v[i]; });
    const GmresResult lin = gmres(apply, precond, rhs, delta, params.gmres);
    if (!lin.converged && lin.residual > 1e-6)
      throw NewtonStalled("cs_newton linear solve stalled, residual " +
                          std::to_string(lin.residual));
    // backtracking line search on the residual 2-norm
    const double f0 = r.l2_norm();
    double step = params.damping;
    bool accepted = false;
    for (int ls = 0; ls < 11; ++ls, step *= 0.5) {
      Field trial = v;
      kernels::axpby(step, delta.data(), 1.0, trial.v.data(), sz);
      if (residual_of(trial).l2_norm() < f0 * (1.0 - 1e-4 * step)) {
        v = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NewtonStalled("cs_newton line search failed at residual " + std::to_string(f0));
  }
  throw MaxIters("cs_newton exceeded " + std::to_string(params.max_iters) + " iterations");
}

namespace {
struct CoupledResidual {
  Field r1, r2;  // r2 is the N equation scaled by 1/(lambda mu^2)
};
}  // namespace

std::pair<Field, Field> McsSystem::residual(double lambda, double mu, const Field& v,
                                            const Field& N) const {
  const std::size_t sz = v.size();
  Field e = exp_u(v);
  Field vpN = like(v);
  kernels::transform(vpN.v.data(), sz, [&](std::size_t i) { return v.v[i] + N.v[i] / mu; });
  Field r1 = sp_.laplacian(vpN);
  kernels::transform(r1.v.data(), sz, [&](std::size_t i) {
    return r1.v[i] + lambda * lambda * e.v[i] * (1.0 - N.v[i] / lambda) - c0_;
  });
  Field nhat = like(v);
  kernels::transform(nhat.v.data(), sz, [&](std::size_t i) { return N.v[i] / lambda; });
  Field r2 = sp_.laplacian(nhat);
  kernels::transform(r2.v.data(), sz, [&](std::size_t i) {
    return r2.v[i] / (mu * mu) - (1.0 + lambda * e.v[i] / mu) * nhat.v[i] +
           (1.0 + lambda / mu) * e.v[i];
  });
  return {r1, r2};
}

McsState McsSystem::mcs_newton(double lambda, double mu, const std::pair<Field, Field>& init,
                               const SolverParams& params) const {
  if (!params.valid()) throw ConfigInvalid("invalid SolverParams");
  if (lambda <= 0 || mu <= 0) throw ConfigInvalid("lambda, mu must be positive");
  const std::size_t sz = (std::size_t)n_ * n_;
  Field v = init.first;
  Field nhat = like(v);
  kernels::transform(nhat.v.data(), sz,
                     [&](std::size_t i) { return init.second.v[i] / lambda; });

  const double tol1 = params.newton_tol * std::max(1.0, lambda * lambda);
  const double tol2 = params.newton_tol;

  auto resid = [&](const Field& vv, const Field& nn) {
    Field e = exp_u(vv);
    Field vpN = like(vv);
    kernels::transform(vpN.v.data(), sz,
                       [&](std::size_t i) { return vv.v[i] + lambda * nn.v[i] / mu; });
    CoupledResidual r{sp_.laplacian(vpN), sp_.laplacian(nn)};
    kernels::transform(r.r1.v.data(), sz, [&](std::size_t i) {
      return r.r1.v[i] + lambda * lambda * e.v[i] * (1.0 - nn.v[i]) - c0_;
    });
    kernels::transform(r.r2.v.data(), sz, [&](std::size_t i) {
      return r.r2.v[i] / (mu * mu) - (1.0 + lambda * e.v[i] / mu) * nn.v[i] +
             (1.0 + lambda / mu) * e.v[i];
    });
    return r;
  };
  auto combined_l2 = [&](const CoupledResidual& r) {
    const double a = r.r1.l2_norm() / std::max(1.0, lambda * lambda);
    const double b = r.r2.l2_norm();
    return std::sqrt(a * a + b * b);
  };

  int iters = 0;
  double prev_norm = 1e300;
  for (;; ++iters) {
    CoupledResidual r = resid(v, nhat);
    const double n1 = r.r1.sup_norm(), n2 = r.r2.sup_norm();
    if (n1 < tol1 && n2 < tol2) break;
    if (iters >= params.max_iters)
      throw MaxIters("mcs_newton exceeded iteration budget, residual " + std::to_string(n1));
    if (n1 / std::max(1.0, lambda * lambda) + n2 > 0.9999 * prev_norm && iters > 3)
      throw NewtonStalled("mcs_newton residual plateau at " + std::to_string(n1));
    prev_norm = n1 / std::max(1.0, lambda * lambda) + n2;

    const Field e = exp_u(v);
    // pointwise Jacobian multipliers in the scaled unknowns (v, N/lambda)
    Field a11 = like(v), a12 = like(v), a21 = like(v), a22 = like(v);
    kernels::transform(a11.v.data(), sz, [&](std::size_t i) {
      return lambda * lambda * e.v[i] * (1.0 - nhat.v[i]);
    });
    kernels::transform(a12.v.data(), sz,
                       [&](std::size_t i) { return -lambda * lambda * e.v[i]; });
    kernels::transform(a21.v.data(), sz, [&](std::size_t i) {
      return e.v[i] * (1.0 + lambda / mu - lambda * nhat.v[i] / mu);
    });
    kernels::transform(a22.v.data(), sz,
                       [&](std::size_t i) { return -(1.0 + lambda * e.v[i] / mu); });

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field dv(lat_, n_), dn(lat_, n_);
      std::copy(x.begin(), x.begin() + sz, dv.v.begin());
      std::copy(x.begin() + sz, x.end(), dn.v.begin());
      Field ldv = sp_.laplacian(dv), ldn = sp_.laplacian(dn);
      y.resize(2 * sz);
      double* y1 = y.data();
      kernels::transform(y1, sz, [&](std::size_t i) {
        return ldv.v[i] + (lambda / mu) * ldn.v[i] + a11.v[i] * dv.v[i] + a12.v[i] * dn.v[i];
      });
      double* y2 = y.data() + sz;
      kernels::transform(y2, sz, [&](std::size_t i) {
        return ldn.v[i] / (mu * mu) + a21.v[i] * dv.v[i] + a22.v[i] * dn.v[i];
      });
    };
    // preconditioner: exact inverse of the frozen topological symbol per mode
    auto precond = [&](const std::vector<double>& x, std::vector<double>& y) {
      Field f1(lat_, n_), f2(lat_, n_);
      std::copy(x.begin(), x.begin() + sz, f1.v.begin());
      std::copy(x.begin() + sz, x.end(), f2.v.begin());
      std::vector<std::complex<double>> c1(sp_.spec_size()), c2(sp_.spec_size());
      sp_.forward(f1.v.data(), c1.data());
      sp_.forward(f2.v.data(), c2.data());
      for (int i = 0; i < n_; ++i)
        for (int jc = 0; jc <= n_ / 2; ++jc) {
          const std::size_t idx = (std::size_t)i * (n_ / 2 + 1) + jc;
          const double K = sp_.wavevector(i, jc).norm2();
          const double m11 = -K, m12 = -(lambda / mu) * K - lambda * lambda;
          const double m21 = 1.0, m22 = -K / (mu * mu) - 1.0 - lambda / mu;
          const double det = m11 * m22 - m12 * m21;
          const std::complex<double> b1 = c1[idx], b2 = c2[idx];
          c1[idx] = (m22 * b1 - m12 * b2) / det;
          c2[idx] = (-m21 * b1 + m11 * b2) / det;
        }
      y.resize(2 * sz);
      Field o1(lat_, n_), o2(lat_, n_);
      sp_.inverse(c1.data(), o1.v.data());
      sp_.inverse(c2.data(), o2.v.data());
      std::copy(o1.v.begin(), o1.v.end(), y.begin());
      std::copy(o2.v.begin(), o2.v.end(), y.begin() + sz);
    };

    std::vector<double> rhs(2 * sz), delta;
    kernels::transform(rhs.data(), sz, [&](std::size_t i) { return -r.r1.v[i]; });
    kernels::transform(rhs.data() + sz, sz, [&](std::size_t i) { return -r.r2.v[i]; });
    // bicgstab keeps the memory footprint flat on the coupled system; fall
    // back to restarted GMRES when it stagnates
    GmresResult lin = bicgstab(apply, precond, rhs, delta, params.gmres);
    if (!lin.converged && lin.residual > 1e-5) {
      delta.assign(2 * sz, 0.0);
      lin = gmres(apply, precond, rhs, delta, params.gmres);
    }
    if (!lin.converged && lin.residual > 1e-5)
      throw NewtonStalled("mcs_newton linear solve stalled, residual " +
                          std::to_string(lin.residual));

    const double f0 = combined_l2(r);
    double step = params.damping;
    bool accepted = false;
    for (int ls = 0; ls < 11; ++ls, step *= 0.5) {
      Field tv = v, tn = nhat;
      kernels::axpby(step, delta.data(), 1.0, tv.v.data(), sz);
      kernels::axpby(step, delta.data() + sz, 1.0, tn.v.data(), sz);
      if (combined_l2(resid(tv, tn)) < f0 * (1.0 - 1e-4 * step)) {
        v = tv;
        nhat = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NewtonStalled("mcs_newton line search failed at residual " + std::to_string(f0));
  }

  McsState st;
  st.v = v;
  st.N = like(v);
  kernels::transform(st.N.v.data(), sz, [&](std::size_t i) { return lambda * nhat.v[i]; });
  st.lambda = lambda;
  st.mu = mu;
  st.vortices = vs_;
  st.newton_iters = iters;
  const CoupledResidual rfin = resid(v, nhat);
  st.residual_norm = std::max(rfin.r1.sup_norm() / std::max(1.0, lambda * lambda),
                              rfin.r2.sup_norm());
  fill_state_metadata(st);
  // Lemma-type sign bounds must hold at convergence; violation marks a
  // spurious numerical branch.  The gate leaves room for roundoff where the
  // exact bound is approached (u -> 0 on the topological branch).
  const double sgn_tol = 1e3 * params.newton_tol;
  if (st.max_u >= sgn_tol)
    throw InvariantViolation("converged state violates u < 0, max u = " +
                             std::to_string(st.max_u));
  if (st.min_nhat <= -sgn_tol || st.max_nhat >= 1.0 + sgn_tol)
    throw InvariantViolation("converged state violates 0 < N < lambda, N/lambda in [" +
                             std::to_string(st.min_nhat) + ", " + std::to_string(st.max_nhat) +
                             "]");
  return st;
}

void McsSystem::fill_state_metadata(McsState& st) const {
  const std::size_t sz = st.v.size();
  const Field e = exp_u(st.v);
  Field dens = like(st.v);
  kernels::transform(dens.v.data(), sz, [&](std::size_t i) {
    return st.lambda * st.lambda * e.v[i] * (1.0 - st.N.v[i] / st.lambda);
  });
  st.mass = dens.integral();
  Field bl = like(st.v), br = like(st.v);
  kernels::transform(bl.v.data(), sz, [&](std::size_t i) {
    return (1.0 + st.lambda / st.mu * e.v[i]) * st.N.v[i] / st.lambda;
  });
  kernels::transform(br.v.data(), sz, [&](std::size_t i) {
    return (1.0 + st.lambda / st.mu) * e.v[i];
  });
  st.balance_lhs = bl.integral();
  st.balance_rhs = br.integral();
  // max of u over off-pole points == ln of max e^u (E0 vanishes at poles)
  st.max_u = std::log(kernels::max(e.v.data(), sz));
  st.min_nhat = kernels::min(st.N.v.data(), sz) / st.lambda;
  st.max_nhat = kernels::max(st.N.v.data(), sz) / st.lambda;
}

std::vector<McsState> McsSystem::continuation(
    const std::vector<std::pair<double, double>>& path, const SolverParams& params,
    std::optional<std::pair<Field, Field>> init) const {
  if (path.empty()) throw ConfigInvalid("empty continuation path");
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& [l0, m0] = path[i - 1];
    const auto& [l1, m1] = path[i];
    if (std::fabs(l1 - l0) > 0.25 * std::max(l0, l1) + 1e-12 ||
        std::fabs(m1 - m0) > 0.25 * std::max(m0, m1) + 1e-12)
      throw ConfigInvalid("continuation path jump exceeds 25% between consecutive points");
  }
  std::vector<McsState> out;
  std::pair<Field, Field> warm =
      init ? *init : topological_init(path.front().first, path.front().second);
  double cl = path.front().first, cm = path.front().second;
  bool have_state = false;
  for (const auto& [tl, tm] : path) {
    const double sl = have_state ? cl : tl, sm = have_state ? cm : tm;
    double done = 0.0, frac = 1.0;
    int bisections = 0;
    while (done < 1.0 - 1e-12) {
      const double t = std::min(1.0, done + frac);
      const double l = sl + (tl - sl) * t;
      const double m = sm + (tm - sm) * t;
      try {
        McsState st = mcs_newton(l, m, warm, params);
        warm = {st.v, st.N};
        cl = l;
        cm = m;
        done = t;
        have_state = true;
        if (done >= 1.0 - 1e-12) out.push_back(std::move(st));
      } catch (const Error&) {
        ++bisections;
        if (bisections > params.continuation_steps)
          throw PathStuck("continuation stuck at lambda=" + std::to_string(l) +
                          " mu=" + std::to_string(m) + " (" + std::to_string(out.size()) +
                          " states completed)");
        frac *= 0.5;
      }
    }
  }
  return out;
}

}  // namespace mcs
