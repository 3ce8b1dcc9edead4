#include "mcslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"

namespace mcs {

namespace {

Field density_field(const McsSystem& sys, const McsState& st) {
  Field e = sys.exp_u(st.v);
  Field d = like(e);
  kernels::transform(d.v.data(), d.v.size(), [&](std::size_t i) {
    return st.lambda * st.lambda * e.v[i] * (1.0 - st.N.v[i] / st.lambda);
  });
  return d;
}

// grid mask: distance above `dist` from every vortex and every given point
std::vector<char> far_mask(const McsSystem& sys, const std::vector<Vec2>& extra, double dist) {
  const int n = sys.n();
  std::vector<char> mask((std::size_t)n * n, 1);
  const TorusLattice& lat = sys.lattice();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x = lat.to_xy({(double)i / n, (double)j / n});
      bool far = sys.background().dist_to_nearest_vortex(x) > dist;
      for (const auto& q : extra)
        far = far && lat.dist(x, lat.to_xy(q)) > dist;
      mask[(std::size_t)i * n + j] = far ? 1 : 0;
    }
  return mask;
}

std::vector<Vec2> detect_peaks(const McsSystem& sys, const Field& shifted_u, double level,
                               double merge_dist) {
  // grid maxima of u + 2 ln lambda above `level`, greedily merged
  const int n = sys.n();
  std::vector<std::pair<double, Vec2>> cands;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double val = shifted_u.at(i, j);
      if (val <= level) continue;
      cands.push_back({val, {(double)i / n, (double)j / n}});
    }
  std::sort(cands.begin(), cands.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Vec2> peaks;
  for (const auto& [val, t] : cands) {
    bool merged = false;
    for (const auto& p : peaks)
      if (sys.lattice().dist(sys.lattice().to_xy(t), sys.lattice().to_xy(p)) < merge_dist)
        merged = true;
    if (!merged) peaks.push_back(t);
  }
  return peaks;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::I: return "I";
    case Verdict::II: return "II";
    case Verdict::III: return "III";
    default: return "Undetermined";
  }
}

double mass_total(const McsSystem& sys, const McsState& st) {
  return density_field(sys, st).integral();
}

double cs_deviation(const McsSystem& sys, const McsState& st) {
  const Field e = sys.exp_u(st.v);
  Field d = like(e);
  kernels::transform(d.v.data(), d.v.size(),
                     [&](std::size_t i) { return e.v[i] - st.N.v[i] / st.lambda; });
  return d.sup_norm();
}

double local_mass(const McsSystem& sys, const McsState& st, Vec2 center, double radius) {
  if (radius >= 0.5 * sys.lattice().injectivity_radius() + 1e-12)
    throw ConfigInvalid("local_mass radius must stay below half the injectivity radius");
  return ball_integral(density_field(sys, st), center, radius);
}

AlternativeReport classify(const McsSystem& sys, const std::vector<McsState>& states,
                           const ClassifyThresholds& thr) {
  if (states.size() < 3) throw ConfigInvalid("classify needs at least 3 states");
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i].lambda <= states[i - 1].lambda)
      throw ConfigInvalid("classify expects strictly increasing lambda");
    if (states[i].lambda / states[i].mu > states[i - 1].lambda / states[i - 1].mu + 1e-12)
      throw ConfigInvalid("classify expects non-increasing lambda/mu");
  }
  const int n = sys.n();
  AlternativeReport rep;

  // track the three detector statistics along the family
  std::vector<double> far_abs_u, peak_sup, off_sup;
  std::vector<Vec2> last_peaks;
  for (const auto& st : states) {
    const Field u = sys.u_field(st.v);
    Field su = like(u);
    kernels::transform(su.v.data(), su.v.size(),
                       [&](std::size_t i) { return u.v[i] + 2.0 * std::log(st.lambda); });
    const auto peaks = detect_peaks(sys, su, thr.peak_hi, 2.0 * thr.far_dist);
    const auto mask = far_mask(sys, peaks, thr.far_dist);
    double fu = 0.0, ps = -1e300, os = -1e300;
    for (std::size_t i = 0; i < su.v.size(); ++i) {
      ps = std::max(ps, su.v[i]);
      if (mask[i]) {
        fu = std::max(fu, std::fabs(u.v[i]));
        os = std::max(os, su.v[i]);
      }
    }
    far_abs_u.push_back(fu);
    peak_sup.push_back(ps);
    off_sup.push_back(os);
    last_peaks = peaks;
  }
  rep.far_sup_abs_u = far_abs_u.back();
  rep.peak_sup = peak_sup.back();
  rep.offpeak_sup = off_sup.back();
  rep.peaks = last_peaks;
  for (const auto& q : last_peaks)
    rep.local_masses.push_back(local_mass(sys, states.back(), q, thr.far_dist));

  const auto decreasing_tail = [](const std::vector<double>& v) {
    return v.back() < v.front() + 1e-12;
  };

  // (I) the topological alternative: u -> 0 away from the vortices
  if (rep.far_sup_abs_u < thr.topo_eps && decreasing_tail(far_abs_u)) {
    rep.verdict = Verdict::I;
    return rep;
  }
  // (III) concentration: diverging peak, collapsing far field, quantized masses
  if (rep.peak_sup > thr.peak_hi && peak_sup.back() > peak_sup.front() &&
      rep.offpeak_sup < thr.off_lo && decreasing_tail(off_sup) && !rep.peaks.empty()) {
    bool masses_ok = true;
    for (double a : rep.local_masses) masses_ok = masses_ok && a >= thr.min_peak_mass;
    if (masses_ok) {
      rep.verdict = Verdict::III;
      return rep;
    }
  }
  // (II) the intermediate regime: u + 2 ln lambda bounded both ways
  bool bounded = true;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Field u = sys.u_field(states[k].v);
    const auto mask = far_mask(sys, {}, thr.far_dist);
    for (std::size_t i = 0; i < u.v.size(); ++i) {
      if (!mask[i]) continue;  // vortex logs are structural, not a regime signal
      const double su = u.v[i] + 2.0 * std::log(states[k].lambda);
      if (su > thr.peak_hi || su < thr.off_lo) bounded = false;
    }
  }
  if (bounded) rep.verdict = Verdict::II;
  (void)n;
  return rep;
}

double pohozaev_residual(const McsSystem& sys, const McsState& st, Vec2 center, double radius) {
  const TorusLattice& lat = sys.lattice();
  if (radius >= 0.5 * lat.injectivity_radius() + 1e-12)
    throw ConfigInvalid("pohozaev ball must stay below half the injectivity radius");
  const Vec2 cxy = lat.to_xy(center);
  // multiplicity at the center, zero off the vortex set
  int m = 0;
  for (std::size_t k = 0; k < sys.vortices().size(); ++k) {
    if (lat.dist(cxy, sys.background().vortex_xy(k)) < 1e-9) m = sys.vortices().multiplicities[k];
    else if (lat.dist(cxy, sys.background().vortex_xy(k)) < radius + 1e-9)
      throw ConfigInvalid("pohozaev ball crosses another vortex point");
  }
  const double lambda = st.lambda, mu = st.mu;

  // smooth grids: v + N/mu and N, with spectral gradients
  Field w = like(st.v);
  kernels::transform(w.v.data(), w.v.size(),
                     [&](std::size_t i) { return st.v.v[i] + st.N.v[i] / mu; });
  Field wx, wy, Nx, Ny;
  sys.spectral().gradient(w, wx, wy);
  sys.spectral().gradient(st.N, Nx, Ny);
  const Field dens = density_field(sys, st);

  const Background& bg = sys.background();
  const int ntheta = 512;
  // boundary terms on |x - c| = radius
  double A1 = 0, A2 = 0, A3 = 0, C1 = 0, C2 = 0;
  for (int k = 0; k < ntheta; ++k) {
    const double th = 2.0 * M_PI * k / ntheta;
    const Vec2 dir{std::cos(th), std::sin(th)};
    const Vec2 x{cxy.x + radius * dir.x, cxy.y + radius * dir.y};
    const Vec2 t = lat.to_lattice(x);
    // grad phi, phi = v + N/mu + u0 + 2 ln lambda - 2 m ln |x - c|
    Vec2 g{wx.interp(t), wy.interp(t)};
    const Vec2 gu0 = bg.grad(x);
    g = g + gu0;
    g = g - dir * (2.0 * m / radius);
    const double xdg = radius * (dir.x * g.x + dir.y * g.y);
    A1 += xdg * xdg / radius;
    A2 += -radius * (g.x * g.x + g.y * g.y) / 2.0;
    A3 += radius * dens.interp(t);  // |x|^{2m+1} e^{phi - N/mu}(1 - N/lambda) = |x| dens
    const Vec2 gn{Nx.interp(t), Ny.interp(t)};
    const double xdn = radius * (dir.x * gn.x + dir.y * gn.y);
    const double nval = st.N.interp(t);
    C1 += (xdn * xdn / radius - radius * (gn.x * gn.x + gn.y * gn.y) / 2.0) / (mu * mu);
    C2 += -nval * nval * radius / 2.0;
  }
  const double dsig = radius * 2.0 * M_PI / ntheta;  // arc element on the circle
  A1 *= dsig;
  A2 *= dsig;
  A3 *= dsig;
  C1 *= dsig;
  C2 *= dsig;

  // interior terms
  const double B = (2.0 + 2.0 * m) * ball_integral(dens, center, radius);
  Field n2 = like(st.N);
  kernels::transform(n2.v.data(), n2.v.size(),
                     [&](std::size_t i) { return st.N.v[i] * st.N.v[i]; });
  const double C3 = ball_integral(n2, center, radius);

  const double lhs = A1 + A2 + A3;
  const double rhs = B + C1 + C2 + C3;
  const double scale = std::max({std::fabs(A1), std::fabs(A2), std::fabs(A3), std::fabs(B),
                                 std::fabs(C1), std::fabs(C2), std::fabs(C3), 1e-300});
  (void)lambda;
  return std::fabs(lhs - rhs) / scale;
}

GaugeFields reconstruct_gauge(const McsSystem& sys, const McsState& st) {
  GaugeFields g;
  g.q_sq = st.lambda * st.mu / 2.0;
  g.phi_sq = sys.exp_u(st.v);
  g.n = like(st.N);
  kernels::transform(g.n.v.data(), g.n.v.size(),
                     [&](std::size_t i) { return st.N.v[i] / 2.0; });
  g.F12 = like(st.N);
  kernels::transform(g.F12.v.data(), g.F12.v.size(), [&](std::size_t i) {
    return g.q_sq * g.phi_sq.v[i] - st.mu * g.n.v[i];
  });
  g.A0 = like(st.N);
  kernels::transform(g.A0.v.data(), g.A0.v.size(),
                     [&](std::size_t i) { return g.q_sq / st.mu - g.n.v[i]; });
  g.flux = g.F12.integral();
  return g;
}

}  // namespace mcs
