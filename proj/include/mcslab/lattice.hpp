#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mcslab/errors.hpp"

namespace mcs {

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double a) const { return {a * x, a * y}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

// Flat torus R^2 / (Z a1 + Z a2).  Fields live on uniform grids in the
// lattice coordinates (t1,t2) in [0,1)^2, x = t1 a1 + t2 a2.
struct TorusLattice {
  Vec2 a1{1.0, 0.0};
  Vec2 a2{0.0, 1.0};

  double area() const { return std::fabs(a1.x * a2.y - a1.y * a2.x); }

  // dual basis: ai . bj = delta_ij
  Vec2 b1() const {
    const double d = a1.x * a2.y - a1.y * a2.x;
    return {a2.y / d, -a2.x / d};
  }
  Vec2 b2() const {
    const double d = a1.x * a2.y - a1.y * a2.x;
    return {-a1.y / d, a1.x / d};
  }

  Vec2 to_xy(Vec2 t) const { return a1 * t.x + a2 * t.y; }
  Vec2 to_lattice(Vec2 x) const { return {b1().dot(x), b2().dot(x)}; }

  // representative of x (a Cartesian separation) with minimal Euclidean norm
  Vec2 min_image(Vec2 x) const {
    Vec2 t = to_lattice(x);
    t.x -= std::round(t.x);
    t.y -= std::round(t.y);
    Vec2 best = to_xy(t);
    double bn = best.norm2();
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        const Vec2 c = to_xy({t.x + i, t.y + j});
        const double n = c.norm2();
        if (n < bn) {
          bn = n;
          best = c;
        }
      }
    return best;
  }

  double dist(Vec2 x, Vec2 y) const { return min_image(x - y).norm(); }

  // half the shortest nonzero lattice vector
  double injectivity_radius() const {
    double best = a1.norm2();
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        if (i == 0 && j == 0) continue;
        best = std::min(best, (a1 * i + a2 * j).norm2());
      }
    return 0.5 * std::sqrt(best);
  }

  bool valid() const { return area() > 0.0; }

  std::uint64_t hash() const;
};

TorusLattice square_lattice(double period = 1.0);

struct VortexSet {
  std::vector<Vec2> points;       // lattice coordinates in [0,1)^2
  std::vector<int> multiplicities;

  int total() const {
    int m = 0;
    for (int mi : multiplicities) m += mi;
    return m;
  }
  std::size_t size() const { return points.size(); }
  void validate(const TorusLattice& lat) const;
};

}  // namespace mcs
