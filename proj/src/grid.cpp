#include "mcslab/grid.hpp"

#include <cmath>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"

namespace mcs {

void Field::check_size(int n) {
  if (n < 64 || (n & (n - 1)) != 0)
    throw ConfigInvalid("grid size must be a power of two >= 64, got " + std::to_string(n));
}

Field::Field(const TorusLattice& lattice, int size, double init) : lat(lattice), n(size) {
  check_size(size);
  v.assign((std::size_t)n * n, init);
}

Field like(const Field& f, double init) { return Field(f.lat, f.n, init); }

double Field::mean() const { return kernels::sum(v.data(), v.size()) / (double)v.size(); }

double Field::sup_norm() const { return kernels::max_abs(v.data(), v.size()); }

double Field::l2_norm() const {
  return std::sqrt(kernels::dot(v.data(), v.data(), v.size()) / (double)v.size() * lat.area());
}

double Field::interp(Vec2 t) const {
  const double fx = (t.x - std::floor(t.x)) * n;
  const double fy = (t.y - std::floor(t.y)) * n;
  const int i0 = (int)std::floor(fx), j0 = (int)std::floor(fy);
  const double ux = fx - i0, uy = fy - j0;
  auto w = [](double u, double p0, double p1, double p2, double p3) {
    // Catmull-Rom
    return p1 + 0.5 * u * (p2 - p0 + u * (2 * p0 - 5 * p1 + 4 * p2 - p3 + u * (3 * (p1 - p2) + p3 - p0)));
  };
  double rows[4];
  for (int di = -1; di <= 2; ++di) {
    const int i = ((i0 + di) % n + n) % n;
    double p[4];
    for (int dj = -1; dj <= 2; ++dj) p[dj + 1] = at(i, ((j0 + dj) % n + n) % n);
    rows[di + 1] = w(uy, p[0], p[1], p[2], p[3]);
  }
  return w(ux, rows[0], rows[1], rows[2], rows[3]);
}

namespace {
// Gauss-Legendre nodes/weights on [0,1] by Newton on Legendre polynomials
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}
}  // namespace

double ball_integral(const Field& f, Vec2 center_lattice, double radius, int nr, int ntheta) {
  std::vector<double> xr, wr;
  gauss_legendre(nr, xr, wr);
  const Vec2 cxy = f.lat.to_xy(center_lattice);
  double acc = 0.0;
  for (int ir = 0; ir < nr; ++ir) {
    const double r = radius * xr[ir];
    double ring = 0.0;
    for (int it = 0; it < ntheta; ++it) {
      const double th = 2.0 * M_PI * it / ntheta;
      const Vec2 x{cxy.x + r * std::cos(th), cxy.y + r * std::sin(th)};
      ring += f.interp(f.lat.to_lattice(x));
    }
    acc += wr[ir] * r * (ring / ntheta);
  }
  return acc * radius * 2.0 * M_PI;
}

double circle_mean(const Field& f, Vec2 center_lattice, double radius, int ntheta) {
  const Vec2 cxy = f.lat.to_xy(center_lattice);
  double acc = 0.0;
  for (int it = 0; it < ntheta; ++it) {
    const double th = 2.0 * M_PI * it / ntheta;
    const Vec2 x{cxy.x + radius * std::cos(th), cxy.y + radius * std::sin(th)};
    acc += f.interp(f.lat.to_lattice(x));
  }
  return acc / ntheta;
}

}  // namespace mcs
