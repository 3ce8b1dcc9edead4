#include "mcslab/green.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"
#include "mcslab/special.hpp"

namespace mcs {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kEuler = 0.57721566490153286060651209;

// E1(z) + ln z, smooth at z=0 (-> -euler)
double e1_plus_log(double z) {
  if (z < 1e-280) return -kEuler;
  if (z <= 1.0) {
    double sum = 0.0, term = 1.0;
    for (int k = 1; k <= 40; ++k) {
      term *= -z / k;
      const double add = term / k;
      sum += add;
      if (std::fabs(add) < 1e-18) break;
    }
    return -kEuler - sum;
  }
  return expint_e1(z) + std::log(z);
}
}  // namespace

Green::Green(const TorusLattice& lat) : lat_(lat) {
  if (!lat.valid()) throw ConfigInvalid("lattice has zero area");
  const double lmin = 2.0 * lat.injectivity_radius();
  eta_ = 6.0 / lmin;
  nimg_ = 2;
  volume_term_ = -1.0 / (4.0 * eta_ * eta_ * lat.area());

  // keep every Fourier mode whose screened coefficient is above 1e-18 of scale
  const Vec2 b1 = lat.b1(), b2 = lat.b2();
  const double kmin = kTwoPi * std::min(b1.norm(), b2.norm());
  const int nmax = (int)std::ceil(2.0 * eta_ * 6.5 / kmin) + 1;
  for (int n1 = -nmax; n1 <= nmax; ++n1)
    for (int n2 = -nmax; n2 <= nmax; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const Vec2 k = (b1 * (double)n1 + b2 * (double)n2) * kTwoPi;
      const double k2 = k.norm2();
      const double expo = k2 / (4.0 * eta_ * eta_);
      if (expo > 42.0) continue;
      modes_.push_back({k, std::exp(-expo) / (k2 * lat.area())});
    }

  // Robin constant gamma(y,y): remove the ln-singular image analytically
  double r = (-2.0 * std::log(eta_) - kEuler) / (4.0 * M_PI) + volume_term_;
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      if (i == 0 && j == 0) continue;
      const double r2 = (lat.a1 * i + lat.a2 * j).norm2();
      r += expint_e1(eta_ * eta_ * r2) / (4.0 * M_PI);
    }
  for (const auto& m : modes_) r += m.c;
  robin_ = r;
}

double Green::gsep(Vec2 s) const {
  double out = volume_term_;
  const Vec2 s0 = lat_.min_image(s);
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      const double r2 = (s0 + lat_.a1 * i + lat_.a2 * j).norm2();
      out += expint_e1(eta_ * eta_ * r2) / (4.0 * M_PI);
    }
  for (const auto& m : modes_) out += m.c * std::cos(m.k.dot(s0));
  return out;
}

double Green::eval(Vec2 x, Vec2 y) const {
  const Vec2 s = lat_.min_image(x - y);
  if (s.norm() < 1e-12) throw PoleCollision("green_eval at coincident points");
  return gsep(s);
}

Vec2 Green::grad(Vec2 x, Vec2 y) const {
  const Vec2 s = lat_.min_image(x - y);
  if (s.norm() < 1e-12) throw PoleCollision("green gradient at coincident points");
  Vec2 g{0, 0};
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      const Vec2 d = s + lat_.a1 * i + lat_.a2 * j;
      const double r2 = d.norm2();
      const double w = -std::exp(-eta_ * eta_ * r2) / (kTwoPi * r2);
      g = g + d * w;
    }
  for (const auto& m : modes_) {
    const double w = -m.c * std::sin(m.k.dot(s));
    g = g + m.k * w;
  }
  return g;
}

Mat2 Green::hess(Vec2 x, Vec2 y) const {
  const Vec2 s = lat_.min_image(x - y);
  if (s.norm() < 1e-12) throw PoleCollision("green hessian at coincident points");
  Mat2 h;
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      const Vec2 d = s + lat_.a1 * i + lat_.a2 * j;
      const double r2 = d.norm2();
      const double e = std::exp(-eta_ * eta_ * r2);
      const double w = -e / (kTwoPi * r2);
      const double dw = e * (1.0 / r2 + eta_ * eta_) / (M_PI * r2);
      h.xx += w + dw * d.x * d.x;
      h.yy += w + dw * d.y * d.y;
      h.xy += dw * d.x * d.y;
    }
  for (const auto& m : modes_) {
    const double w = -m.c * std::cos(m.k.dot(s));
    h.xx += w * m.k.x * m.k.x;
    h.yy += w * m.k.y * m.k.y;
    h.xy += w * m.k.x * m.k.y;
  }
  return h;
}

double Green::gamma(Vec2 x, Vec2 y) const {
  const Vec2 s0 = lat_.min_image(x - y);
  const double r2 = s0.norm2();
  // ln-singular image combined with the log analytically
  double out = (e1_plus_log(eta_ * eta_ * r2) - 2.0 * std::log(eta_)) / (4.0 * M_PI) +
               volume_term_;
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      if (i == 0 && j == 0) continue;
      const double rr = (s0 + lat_.a1 * i + lat_.a2 * j).norm2();
      out += expint_e1(eta_ * eta_ * rr) / (4.0 * M_PI);
    }
  for (const auto& m : modes_) out += m.c * std::cos(m.k.dot(s0));
  return out;
}

Vec2 Green::gamma_grad(Vec2 x, Vec2 y) const {
  const Vec2 s0 = lat_.min_image(x - y);
  const double r2 = s0.norm2();
  // near image and the log combine to s (1 - e^{-eta^2 r^2})/(2 pi r^2),
  // smooth through r=0 where it tends to s eta^2/(2 pi)
  Vec2 g{0, 0};
  if (r2 > 1e-280) g = s0 * (-std::expm1(-eta_ * eta_ * r2) / (kTwoPi * r2));
  for (int i = -nimg_; i <= nimg_; ++i)
    for (int j = -nimg_; j <= nimg_; ++j) {
      if (i == 0 && j == 0) continue;
      const Vec2 d = s0 + lat_.a1 * i + lat_.a2 * j;
      const double rr = d.norm2();
      g = g + d * (-std::exp(-eta_ * eta_ * rr) / (kTwoPi * rr));
    }
  for (const auto& m : modes_) g = g + m.k * (-m.c * std::sin(m.k.dot(s0)));
  return g;
}

Background::Background(const TorusLattice& lat, const VortexSet& vs)
    : green_(lat), vs_(vs) {
  vs.validate(lat);
  for (const auto& p : vs_.points) pxy_.push_back(lat.to_xy(p));
}

double Background::eval(Vec2 x) const {
  double u = 0.0;
  for (std::size_t i = 0; i < vs_.size(); ++i)
    u += -4.0 * M_PI * vs_.multiplicities[i] * green_.eval(x, pxy_[i]);
  return u;
}

Vec2 Background::grad(Vec2 x) const {
  Vec2 g{0, 0};
  for (std::size_t i = 0; i < vs_.size(); ++i)
    g = g + green_.grad(x, pxy_[i]) * (-4.0 * M_PI * vs_.multiplicities[i]);
  return g;
}

Mat2 Background::hess(Vec2 x) const {
  Mat2 h;
  for (std::size_t i = 0; i < vs_.size(); ++i) {
    const Mat2 hi = green_.hess(x, pxy_[i]);
    const double c = -4.0 * M_PI * vs_.multiplicities[i];
    h.xx += c * hi.xx;
    h.xy += c * hi.xy;
    h.yy += c * hi.yy;
  }
  return h;
}

double Background::exp_u0(Vec2 x) const {
  // e^{u0} = prod |x-p_i|^{2 m_i} * exp(smooth); vanishes like |x-p_i|^{2m_i}
  double logv = 0.0;
  for (std::size_t i = 0; i < vs_.size(); ++i) {
    const double r = lattice().dist(x, pxy_[i]);
    if (r < 1e-14) return 0.0;
    logv += -4.0 * M_PI * vs_.multiplicities[i] * green_.gamma(x, pxy_[i]) +
            2.0 * vs_.multiplicities[i] * std::log(r);
  }
  return std::exp(logv);
}

double Background::hat_eval(Vec2 x, std::size_t i) const {
  double u = -4.0 * M_PI * vs_.multiplicities[i] * green_.gamma(x, pxy_[i]);
  for (std::size_t j = 0; j < vs_.size(); ++j)
    if (j != i) u += -4.0 * M_PI * vs_.multiplicities[j] * green_.eval(x, pxy_[j]);
  return u;
}

double Background::dist_to_nearest_vortex(Vec2 x) const {
  double d = 1e300;
  for (const auto& p : pxy_) d = std::min(d, lattice().dist(x, p));
  return d;
}

std::vector<Vec2> coarse_seed_grid(int per_dim) {
  std::vector<Vec2> seeds;
  for (int i = 0; i < per_dim; ++i)
    for (int j = 0; j < per_dim; ++j)
      seeds.push_back({(i + 0.5) / per_dim, (j + 0.5) / per_dim});
  return seeds;
}

std::vector<CriticalPoint> critical_points(const Background& bg,
                                           const std::vector<Vec2>& seeds,
                                           double exclusion) {
  const TorusLattice& lat = bg.lattice();
  std::vector<CriticalPoint> found;
  for (const auto& seed : seeds) {
    Vec2 x = lat.to_xy(seed);
    if (bg.dist_to_nearest_vortex(x) < exclusion) continue;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const Vec2 g = bg.grad(x);
      const Mat2 h = bg.hess(x);
      const double det = h.det();
      if (std::fabs(det) < 1e-14) break;
      Vec2 step{(-g.x * h.yy + g.y * h.xy) / det, (-g.y * h.xx + g.x * h.xy) / det};
      const double slen = step.norm();
      if (slen > 0.2) step = step * (0.2 / slen);
      x = x + step;
      if (bg.dist_to_nearest_vortex(x) < exclusion) break;
      if (bg.grad(x).norm() < 1e-12) {
        ok = true;
        break;
      }
    }
    if (!ok) continue;  // NoConvergence for this seed: dropped
    Vec2 t = lat.to_lattice(x);
    t.x -= std::floor(t.x);
    t.y -= std::floor(t.y);
    bool dup = false;
    for (const auto& c : found) {
      Vec2 d{t.x - c.q.x, t.y - c.q.y};
      d.x -= std::round(d.x);
      d.y -= std::round(d.y);
      if (std::fabs(d.x) < 1e-6 && std::fabs(d.y) < 1e-6) dup = true;
    }
    if (dup) continue;
    CriticalPoint cp;
    cp.q = t;
    cp.hessian = bg.hess(lat.to_xy(t));
    cp.nondegenerate = std::fabs(cp.hessian.det()) > 1e-8;
    const double tr = cp.hessian.trace(), det = cp.hessian.det();
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double e1 = tr / 2.0 - disc, e2 = tr / 2.0 + disc;
    cp.morse_index = (e1 < 0) + (e2 < 0);
    found.push_back(cp);
  }
  return found;
}

GreenTable GreenTable::build(const Green& green, int n, Vec2 pole_lattice) {
  GreenTable t;
  t.lat = green.lattice();
  t.n = n;
  t.pole = pole_lattice;
  t.G.assign((std::size_t)n * n, 0.0);
  t.gamma.assign((std::size_t)n * n, 0.0);
  const Vec2 pxy = t.lat.to_xy(pole_lattice);
  kernels::fill(t.gamma.data(), t.gamma.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const Vec2 x = t.lat.to_xy({(double)i / n, (double)j / n});
    return green.gamma(x, pxy);
  });
  kernels::fill(t.G.data(), t.G.size(), [&](std::size_t idx) {
    const int i = (int)(idx / n), j = (int)(idx % n);
    const Vec2 x = t.lat.to_xy({(double)i / n, (double)j / n});
    const double r = t.lat.dist(x, pxy);
    if (r < 1e-12) return 0.0;  // pole sample left as 0
    return t.gamma[idx] - std::log(r) / kTwoPi;
  });
  return t;
}

std::string GreenTable::cache_key() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "green_%016llx_%d",
                (unsigned long long)(lat.hash() ^ (std::uint64_t)n * 0x9e3779b97f4a7c15ull), n);
  return buf;
}

void GreenTable::save(const std::string& path) const {
  std::ofstream f(path + ".tmp", std::ios::binary);
  const char magic[8] = {'M', 'C', 'S', 'G', 'R', 'N', '0', '1'};
  f.write(magic, 8);
  const double head[7] = {lat.a1.x, lat.a1.y, lat.a2.x, lat.a2.y,
                          (double)n, pole.x, pole.y};
  f.write(reinterpret_cast<const char*>(head), sizeof head);
  f.write(reinterpret_cast<const char*>(G.data()), (std::streamsize)(G.size() * 8));
  f.write(reinterpret_cast<const char*>(gamma.data()), (std::streamsize)(gamma.size() * 8));
  f.close();
  std::rename((path + ".tmp").c_str(), path.c_str());
}

std::optional<GreenTable> GreenTable::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "MCSGRN01", 8) != 0) return std::nullopt;
  double head[7];
  f.read(reinterpret_cast<char*>(head), sizeof head);
  GreenTable t;
  t.lat = TorusLattice{{head[0], head[1]}, {head[2], head[3]}};
  t.n = (int)head[4];
  t.pole = {head[5], head[6]};
  t.G.resize((std::size_t)t.n * t.n);
  t.gamma.resize((std::size_t)t.n * t.n);
  f.read(reinterpret_cast<char*>(t.G.data()), (std::streamsize)(t.G.size() * 8));
  f.read(reinterpret_cast<char*>(t.gamma.data()), (std::streamsize)(t.gamma.size() * 8));
  if (!f) return std::nullopt;
  return t;
}

}  // namespace mcs
