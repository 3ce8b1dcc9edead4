#include "mcslab/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mcs {

namespace {

// state: w, w', and the running quadratures  int F r,  int sigma r,  int sigma^2 r
using State = std::array<double, 5>;

struct Rhs {
  int m;
  void operator()(double r, const State& y, State& dy) const {
    const double logsig = y[0] + 2.0 * m * std::log(r);
    const double sig = logsig > 600.0 ? std::exp(600.0) : std::exp(logsig);
    const double F = sig * (1.0 - sig);
    dy[0] = y[1];
    dy[1] = -y[1] / r - F;
    dy[2] = F * r;
    dy[3] = sig * r;
    dy[4] = sig * sig * r;
  }
  double wfull(double r, const State& y) const { return y[0] + 2.0 * m * std::log(r); }
};

State initial_state(double s, int m, double r0) {
  // two-term start w = s + c r^{2m+2}; steps off the coordinate singularity
  const double es = std::exp(s);
  const double c = -es * (1.0 - (m == 0 ? es : 0.0)) / ((2.0 * m + 2.0) * (2.0 * m + 2.0));
  State y{};
  y[0] = s + c * std::pow(r0, 2.0 * m + 2.0);
  y[1] = (2.0 * m + 2.0) * c * std::pow(r0, 2.0 * m + 1.0);
  // quadratures start from 0; the omitted [0, r0] contribution is O(r0^{2m+2})
  return y;
}

void check_divergence(double r, const State& y, int m) {
  const double wf = y[0] + 2.0 * m * std::log(r);
  if (wf > 1e-6 || y[0] < -1e6)
    throw IntegrationDiverged("no entire profile: w(" + std::to_string(r) +
                              ") left the admissible range (s too large for m >= 1?)");
}

// Dormand-Prince 5(4) pair
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  template <class F>
  static void step(const F& f, double r, const State& y, double h, State& y5, State& err) {
    State k1, k2, k3, k4, k5, k6, k7, t;
    f(r, y, k1);
    auto adv = [&](const State& yy, std::initializer_list<std::pair<const State*, double>> terms,
                   State& out) {
      out = yy;
      for (auto& [k, a] : terms)
        for (int i = 0; i < 5; ++i) out[i] += h * a * (*k)[i];
    };
    adv(y, {{&k1, 1.0 / 5}}, t);
    f(r + c2 * h, t, k2);
    adv(y, {{&k1, 3.0 / 40}, {&k2, 9.0 / 40}}, t);
    f(r + c3 * h, t, k3);
    adv(y, {{&k1, 44.0 / 45}, {&k2, -56.0 / 15}, {&k3, 32.0 / 9}}, t);
    f(r + c4 * h, t, k4);
    adv(y, {{&k1, 19372.0 / 6561}, {&k2, -25360.0 / 2187}, {&k3, 64448.0 / 6561}, {&k4, -212.0 / 729}}, t);
    f(r + c5 * h, t, k5);
    adv(y, {{&k1, 9017.0 / 3168}, {&k2, -355.0 / 33}, {&k3, 46732.0 / 5247}, {&k4, 49.0 / 176}, {&k5, -5103.0 / 18656}}, t);
    f(r + h, t, k6);
    adv(y, {{&k1, 35.0 / 384}, {&k3, 500.0 / 1113}, {&k4, 125.0 / 192}, {&k5, -2187.0 / 6784}, {&k6, 11.0 / 84}}, y5);
    f(r + h, y5, k7);
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    for (int i = 0; i < 5; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }
};

void fit_into(RadialProfile& p);

}  // namespace

double RadialProfile::sigma_from(double r, double wr) const {
  if (r <= 0.0) return m == 0 ? std::exp(s) : 0.0;
  return std::exp(wr + 2.0 * m * std::log(r));
}

std::size_t RadialProfile::locate(double r) const {
  auto it = std::upper_bound(r_grid.begin(), r_grid.end(), r);
  std::size_t i = (std::size_t)std::max<std::ptrdiff_t>(1, it - r_grid.begin()) - 1;
  return std::min(i, r_grid.size() - 2);
}

double RadialProfile::value(double r) const {
  if (trivial) return 0.0;
  if (r <= r_grid.front()) {
    const double es = std::exp(s);
    const double c = -es * (1.0 - (m == 0 ? es : 0.0)) / ((2.0 * m + 2.0) * (2.0 * m + 2.0));
    return s + c * std::pow(r, 2.0 * m + 2.0);
  }
  if (r >= r_max) return -beta * std::log(r) + I1 - a1 * std::pow(r, -decay_power());
  const std::size_t i = locate(r);
  const double h = r_grid[i + 1] - r_grid[i];
  const double t = (r - r_grid[i]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * w[i] + h10 * h * w_prime[i] + h01 * w[i + 1] + h11 * h * w_prime[i + 1];
}

double RadialProfile::deriv(double r) const {
  if (trivial) return 0.0;
  if (r <= r_grid.front()) {
    const double es = std::exp(s);
    const double c = -es * (1.0 - (m == 0 ? es : 0.0)) / ((2.0 * m + 2.0) * (2.0 * m + 2.0));
    return (2.0 * m + 2.0) * c * std::pow(r, 2.0 * m + 1.0);
  }
  if (r >= r_max)
    return -beta / r + a1 * decay_power() * std::pow(r, -decay_power() - 1.0);
  const std::size_t i = locate(r);
  const double h = r_grid[i + 1] - r_grid[i];
  const double t = (r - r_grid[i]) / h;
  // derivative of the cubic Hermite interpolant
  const double d00 = (6 * t * t - 6 * t) / h, d10 = 3 * t * t - 4 * t + 1;
  const double d01 = (6 * t - 6 * t * t) / h, d11 = 3 * t * t - 2 * t;
  return d00 * w[i] + d10 * w_prime[i] + d01 * w[i + 1] + d11 * w_prime[i + 1];
}

double RadialProfile::mass(double r) const {
  if (trivial) return 0.0;
  if (r <= r_grid.front()) return 0.0;
  if (r >= r_max) return mass_cum.back() + tail_mass();  // full mass beyond fit range
  const std::size_t i = locate(r);
  const double h = r_grid[i + 1] - r_grid[i];
  const double t = (r - r_grid[i]) / h;
  auto dmass = [&](std::size_t k) {
    const double rr = r_grid[k];
    const double sg = sigma_from(rr, w[k]);
    return sg * (1.0 - sg) * rr;
  };
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * mass_cum[i] + h10 * h * dmass(i) + h01 * mass_cum[i + 1] + h11 * h * dmass(i + 1);
}

double RadialProfile::tail_mass() const {
  if (trivial) return 0.0;
  const double p = decay_power();
  if (p <= 0.1) return 0.0;
  const double C = std::exp(I1);
  // sigma ~ C r^{-p-2} (1 - a1 r^{-p});  F = sigma(1-sigma)
  return C * std::pow(r_max, -p) / p - C * a1 * std::pow(r_max, -2 * p) / (2 * p) -
         C * C * std::pow(r_max, -2 * p - 2) / (2 * p + 2);
}

double RadialProfile::tail_ew() const {
  if (trivial) return 0.0;
  const double p = decay_power();
  if (p <= 0.1) return 0.0;
  const double C = std::exp(I1);
  return C * std::pow(r_max, -p) / p - C * a1 * std::pow(r_max, -2 * p) / (2 * p);
}

double RadialProfile::tail_e2w() const {
  if (trivial) return 0.0;
  const double p = decay_power();
  if (p <= 0.1) return 0.0;
  const double C = std::exp(I1);
  return C * C * std::pow(r_max, -2 * p - 2) / (2 * p + 2);
}

namespace {

void fit_into(RadialProfile& p) {
  // provisional beta from the endpoint slope fixes the basis exponent,
  // then the quadrature value with the fitted tail refines it
  p.beta = -p.r_grid.back() * p.w_prime.back();
  AsymptoticFit f = fit_asymptotics(p, p.window);
  p.a1 = f.a1;
  p.I1 = f.I1;
  p.fit_residual = f.residual;
  p.beta = p.mass_cum.back() + p.tail_mass();
  f = fit_asymptotics(p, p.window);
  p.a1 = f.a1;
  p.I1 = f.I1;
  p.fit_residual = f.residual;
  p.beta = p.mass_cum.back() + p.tail_mass();
}

RadialProfile shoot_adaptive(double s, int m, const ShootingConfig& cfg) {
  const double scale = ShootingConfig::scale(s);
  const double rmax = cfg.r_max * scale;
  Rhs rhs{m};
  RadialProfile p;
  p.m = m;
  p.s = s;
  p.r_max = rmax;
  p.window = {cfg.fit_window.lo * scale, cfg.fit_window.hi * scale};

  double r = 1e-8;
  State y = initial_state(s, m, r);
  double h = 1e-4;
  auto push = [&](double rr, const State& yy) {
    p.r_grid.push_back(rr);
    p.w.push_back(yy[0]);
    p.w_prime.push_back(yy[1]);
    p.mass_cum.push_back(yy[2]);
    p.ew_cum.push_back(yy[3]);
    p.e2w_cum.push_back(yy[4]);
  };
  push(r, y);
  State ynew, err;
  long guard = 0;
  while (r < rmax) {
    if (++guard > 50'000'000)
      throw IntegrationDiverged("step controller stalled at r = " + std::to_string(r));
    h = std::min({h, rmax - r, cfg.max_step * (1.0 + r / 25.0)});
    Dopri5::step(rhs, r, y, h, ynew, err);
    double enorm = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      enorm = std::max(enorm, std::fabs(err[i]) / sc);
    }
    if (enorm <= 1.0) {
      r += h;
      y = ynew;
      check_divergence(r, y, m);
      push(r, y);
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(enorm, 1e-10), -0.2), 0.2, 5.0);
    h *= fac;
    if (h < 1e-14 * (1.0 + r))
      throw IntegrationDiverged("step underflow at r = " + std::to_string(r));
  }
  fit_into(p);
  return p;
}

RadialProfile shoot_fixed(double s, int m, const ShootingConfig& cfg) {
  const double scale = ShootingConfig::scale(s);
  const double rmax = cfg.r_max * scale;
  if (rmax > 1e6)
    throw TruncationTooSmall("fixed-step integration impractical for s = " + std::to_string(s));
  Rhs rhs{m};
  RadialProfile p;
  p.m = m;
  p.s = s;
  p.r_max = rmax;
  p.window = {cfg.fit_window.lo * scale, cfg.fit_window.hi * scale};

  const double h = 1e-3 * scale;
  const long nsteps = (long)std::ceil(rmax / h);
  const long keep_every = std::max(1L, nsteps / 200000);
  double r = h * 1e-3;
  State y = initial_state(s, m, r);
  auto push = [&](double rr, const State& yy) {
    p.r_grid.push_back(rr);
    p.w.push_back(yy[0]);
    p.w_prime.push_back(yy[1]);
    p.mass_cum.push_back(yy[2]);
    p.ew_cum.push_back(yy[3]);
    p.e2w_cum.push_back(yy[4]);
  };
  push(r, y);
  State k1, k2, k3, k4, t;
  for (long step = 0; step < nsteps; ++step) {
    const double hh = std::min(h, rmax - r);
    if (hh <= 0) break;
    rhs(r, y, k1);
    for (int i = 0; i < 5; ++i) t[i] = y[i] + 0.5 * hh * k1[i];
    rhs(r + 0.5 * hh, t, k2);
    for (int i = 0; i < 5; ++i) t[i] = y[i] + 0.5 * hh * k2[i];
    rhs(r + 0.5 * hh, t, k3);
    for (int i = 0; i < 5; ++i) t[i] = y[i] + hh * k3[i];
    rhs(r + hh, t, k4);
    for (int i = 0; i < 5; ++i)
      y[i] += hh / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    r += hh;
    if (step % 1000 == 0) check_divergence(r, y, m);
    if (step % keep_every == 0 || r >= rmax) push(r, y);
  }
  check_divergence(r, y, m);
  if (p.r_grid.back() < rmax) push(rmax, y);
  fit_into(p);
  return p;
}

}  // namespace

RadialProfile shoot(double s, int m, const ShootingConfig& cfg, Integrator method) {
  if (!cfg.valid()) throw ConfigInvalid("invalid ShootingConfig");
  if (m < 0) throw ConfigInvalid("multiplicity must be nonnegative");
  if (s > 0) throw ConfigInvalid("shooting value must satisfy s <= 0");
  if (s == 0.0) {
    // trivial profile, returned exactly
    RadialProfile p;
    p.m = m;
    p.s = 0.0;
    p.trivial = true;
    p.r_max = cfg.r_max;
    p.window = cfg.fit_window;
    return p;
  }
  RadialProfile p = (method == Integrator::AdaptiveRK45) ? shoot_adaptive(s, m, cfg)
                                                         : shoot_fixed(s, m, cfg);
  // gate on the asymptotic fit quality at the truncation radius
  const double wfit = -p.beta * std::log(p.r_max) + p.I1 - p.a1 * std::pow(p.r_max, -p.decay_power());
  if (std::fabs(wfit - p.w.back()) > cfg.fit_tol * std::max(1.0, std::fabs(p.w.back())))
    throw TruncationTooSmall("asymptotic fit residual " +
                             std::to_string(std::fabs(wfit - p.w.back())) + " at r_max");
  p.beta_slope = 0.0;
  p.beta = beta_of_profile(p);
  return p;
}

double beta_of_profile(RadialProfile& p) {
  if (p.trivial) return 0.0;
  if (p.empty()) throw ConfigInvalid("profile not integrated");
  // (a) quadrature with fitted tail
  const double quad = p.mass_cum.back() + p.tail_mass();
  // (b) slope fit of w'(r) ~ -beta/r on the window.  The raw one-term fit is
  // biased by the next decay order, so fit [-1/r, (r/r_lo)^{-(p+1)}] and keep
  // the -1/r coefficient; the exponent comes from a provisional pass.
  const int npts = 256;
  auto slope_fit = [&](double pw) {
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (int i = 0; i < npts; ++i) {
      const double r = p.window.lo * std::pow(p.window.hi / p.window.lo, (double)i / (npts - 1));
      const double x1 = -1.0 / r;
      const double x2 = pw > 0.0 ? std::pow(r / p.window.lo, -(pw + 1.0)) : 0.0;
      const double y = p.deriv(r);
      s11 += x1 * x1;
      s12 += x1 * x2;
      s22 += x2 * x2;
      b1 += y * x1;
      b2 += y * x2;
    }
    if (pw <= 0.0) return b1 / s11;
    const double det = s11 * s22 - s12 * s12;
    return (b1 * s22 - b2 * s12) / det;
  };
  double slope = slope_fit(0.0);
  slope = slope_fit(slope - 2.0 * p.m - 2.0);
  p.beta_slope = slope;
  if (std::fabs(quad - slope) > 1e-4 * std::fabs(quad))
    throw MethodMismatch("beta quadrature " + std::to_string(quad) + " vs slope fit " +
                         std::to_string(slope) + " (r_max too small)");
  return quad;
}

IdentityReport check_integral_identities(const RadialProfile& p) {
  IdentityReport rep;
  if (p.trivial) return rep;  // both sides degenerate for w == 0
  if (p.beta == 0.0) throw ConfigInvalid("profile beta not set");
  rep.applicable = true;
  const double twopi = 2.0 * M_PI;
  rep.int_ew = twopi * (p.ew_cum.back() + p.tail_ew());
  rep.int_e2w = twopi * (p.e2w_cum.back() + p.tail_e2w());
  // closed forms hold for the decay coefficient of the singular solution
  const double bd = p.beta - 2.0 * p.m;
  const double m = p.m;
  rep.closed_e2w = M_PI * (bd * bd - 4.0 * bd - 4.0 * m * m - 8.0 * m);
  rep.closed_ew = M_PI * (bd * bd - 2.0 * bd - 4.0 * m * m - 4.0 * m);
  rep.dev_e2w = std::fabs(rep.int_e2w - rep.closed_e2w) / std::fabs(rep.closed_e2w);
  rep.dev_ew = std::fabs(rep.int_ew - rep.closed_ew) / std::fabs(rep.closed_ew);
  return rep;
}

AsymptoticFit fit_asymptotics(const RadialProfile& p) { return fit_asymptotics(p, p.window); }

AsymptoticFit fit_asymptotics(const RadialProfile& p, const FitWindow& window) {
  if (p.trivial) throw ConfigInvalid("trivial profile has no decay to fit");
  const double pw = p.beta - 2.0 * p.m - 2.0;
  if (pw <= 0.05) throw IllConditionedFit("decay power too small for the two-term basis");
  // least squares of w + beta ln r against [1, (r/r_lo)^{-pw}]; the scaled
  // second column keeps the normal matrix well conditioned on far windows
  const int npts = 400;
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i < npts; ++i) {
    const double r = window.lo * std::pow(window.hi / window.lo, (double)i / (npts - 1));
    const double x2 = std::pow(r / window.lo, -pw);
    const double y = p.value(r) + p.beta * std::log(r);
    s11 += 1.0;
    s12 += x2;
    s22 += x2 * x2;
    b1 += y;
    b2 += y * x2;
  }
  const double det = s11 * s22 - s12 * s12;
  const double tr = s11 + s22;
  // condition estimate of the 2x2 normal matrix
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4 * det));
  const double lmax = (tr + disc) / 2, lmin = (tr - disc) / 2;
  if (lmin <= 0 || std::sqrt(lmax / lmin) > 1e10)
    throw IllConditionedFit("design matrix condition exceeds 1e10");
  AsymptoticFit f;
  f.I1 = (b1 * s22 - b2 * s12) / det;
  const double c2 = (s11 * b2 - s12 * b1) / det;
  f.a1 = -c2 * std::pow(window.lo, pw);
  double res = 0.0;
  for (int i = 0; i < npts; ++i) {
    const double r = window.lo * std::pow(window.hi / window.lo, (double)i / (npts - 1));
    const double y = p.value(r) + p.beta * std::log(r);
    const double e = y - (f.I1 - f.a1 * std::pow(r, -pw));
    res = std::max(res, std::fabs(e));
  }
  f.residual = res;
  return f;
}

double solve_for_beta(double target_beta, int m, const ShootingConfig& cfg) {
  if (target_beta <= 4.0 * (1.0 + m))
    throw BracketFailure("target beta must exceed the lower bound 4(1+m)");
  auto beta_at = [&](double s) -> double {
    return shoot(s, m, cfg).beta;  // may throw IntegrationDiverged
  };
  double lo = -80.0;          // beta close to its infimum
  double hi = -1e-6;          // m = 0: beta -> +infinity
  if (m >= 1) {
    // entire profiles exist only below a critical s; bracket the threshold
    double bad = -1e-3, good = -80.0;
    double step = -1.0;
    for (double s = -1.0; s > -80.0; s += step, step *= 2.0) {
      try {
        beta_at(s);
        good = s;
        break;
      } catch (const IntegrationDiverged&) {
        bad = s;
      }
    }
    if (good <= -80.0) {
      try {
        beta_at(-80.0);
        good = -80.0;
      } catch (const IntegrationDiverged&) {
        throw BracketFailure("no entire profile found for m = " + std::to_string(m));
      }
    }
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (bad + good);
      try {
        beta_at(mid);
        good = mid;
      } catch (const IntegrationDiverged&) {
        bad = mid;
      }
    }
    hi = good;
  }
  double blo = beta_at(lo), bhi = beta_at(hi);
  if (!(blo <= target_beta && target_beta <= bhi))
    throw BracketFailure("bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "] gives beta in [" + std::to_string(blo) + ", " + std::to_string(bhi) +
                         "], target " + std::to_string(target_beta) + " outside");
  // bisection on the strictly increasing map s -> beta(s)
  double s = 0.0;
  for (int it = 0; it < 200; ++it) {
    s = 0.5 * (lo + hi);
    const double b = beta_at(s);
    if (std::fabs(b - target_beta) < 1e-6 * target_beta) return s;
    if (b < target_beta)
      lo = s;
    else
      hi = s;
    if (hi - lo < 1e-14 * std::fabs(lo)) break;
  }
  const double b = beta_at(s);
  if (std::fabs(b - target_beta) > 1e-6 * target_beta)
    throw BracketFailure("bisection failed to reach tolerance, beta = " + std::to_string(b));
  return s;
}

void RadialProfile::save(const std::string& path) const {
  nlohmann::json head;
  head["m"] = m;
  head["s"] = s;
  head["beta"] = beta;
  head["a1"] = a1;
  head["I1"] = I1;
  head["r_max"] = r_max;
  std::ofstream f(path + ".tmp");
  f << "# " << head.dump() << "\n";
  f.precision(17);
  for (std::size_t i = 0; i < r_grid.size(); ++i)
    f << r_grid[i] << " " << w[i] << " " << w_prime[i] << "\n";
  f.close();
  std::rename((path + ".tmp").c_str(), path.c_str());
}

RadialProfile RadialProfile::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigInvalid("cannot open profile file " + path);
  std::string line;
  std::getline(f, line);
  if (line.size() < 2 || line[0] != '#') throw ConfigInvalid("missing profile header");
  const nlohmann::json head = nlohmann::json::parse(line.substr(1));
  RadialProfile p;
  p.m = head.at("m").get<int>();
  p.s = head.at("s").get<double>();
  p.beta = head.at("beta").get<double>();
  p.a1 = head.at("a1").get<double>();
  p.I1 = head.at("I1").get<double>();
  p.r_max = head.at("r_max").get<double>();
  double r, wv, wp;
  while (f >> r >> wv >> wp) {
    p.r_grid.push_back(r);
    p.w.push_back(wv);
    p.w_prime.push_back(wp);
  }
  p.trivial = p.r_grid.empty();
  // cumulative quadratures are not serialized; rebuild by trapezoid on the grid
  p.mass_cum.assign(p.r_grid.size(), 0.0);
  p.ew_cum.assign(p.r_grid.size(), 0.0);
  p.e2w_cum.assign(p.r_grid.size(), 0.0);
  for (std::size_t i = 1; i < p.r_grid.size(); ++i) {
    auto f0 = [&](std::size_t k) {
      const double sg = p.sigma_from(p.r_grid[k], p.w[k]);
      return std::array<double, 3>{sg * (1 - sg) * p.r_grid[k], sg * p.r_grid[k],
                                   sg * sg * p.r_grid[k]};
    };
    const auto a = f0(i - 1), b = f0(i);
    const double h = p.r_grid[i] - p.r_grid[i - 1];
    p.mass_cum[i] = p.mass_cum[i - 1] + 0.5 * h * (a[0] + b[0]);
    p.ew_cum[i] = p.ew_cum[i - 1] + 0.5 * h * (a[1] + b[1]);
    p.e2w_cum[i] = p.e2w_cum[i - 1] + 0.5 * h * (a[2] + b[2]);
  }
  return p;
}

}  // namespace mcs
