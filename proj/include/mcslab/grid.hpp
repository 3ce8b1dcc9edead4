#pragma once

#include <cstddef>
#include <vector>

#include "mcslab/lattice.hpp"

namespace mcs {

// Scalar grid function on the torus, sampled at t = (i/n, j/n) in lattice
// coordinates, row-major v[i*n + j].  n must be a power of two >= 64.
struct Field {
  TorusLattice lat;
  int n = 0;
  std::vector<double> v;

  Field() = default;
  Field(const TorusLattice& lattice, int size, double init = 0.0);

  double& at(int i, int j) { return v[(std::size_t)i * n + j]; }
  double at(int i, int j) const { return v[(std::size_t)i * n + j]; }
  std::size_t size() const { return v.size(); }

  Vec2 point(int i, int j) const { return lat.to_xy({(double)i / n, (double)j / n}); }

  double mean() const;
  double integral() const { return mean() * lat.area(); }
  double sup_norm() const;
  double l2_norm() const;  // sqrt(int f^2 dx)

  // cubic (Catmull-Rom) interpolation at lattice coordinates t
  double interp(Vec2 t) const;

  static void check_size(int n);
};

Field like(const Field& f, double init = 0.0);

// integral of f over the metric ball B_radius(center), center in lattice
// coordinates; polar Gauss-Legendre x trapezoid rule with cubic sampling
double ball_integral(const Field& f, Vec2 center_lattice, double radius,
                     int nr = 96, int ntheta = 256);

// 1/(2pi r) * contour integral over |x-c| = r of f, same sampling
double circle_mean(const Field& f, Vec2 center_lattice, double radius, int ntheta = 256);

}  // namespace mcs
