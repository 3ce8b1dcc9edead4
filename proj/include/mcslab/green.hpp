#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mcslab/lattice.hpp"

namespace mcs {

struct Mat2 {
  double xx = 0, xy = 0, yy = 0;
  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }
};

// Doubly periodic Green's function with
//   -Delta_x G(x,y) = delta_y - 1/|Omega|,   int_Omega G(x,.) = 0,
// evaluated by Ewald splitting: a Gaussian-screened charge summed over near
// images in real space (E1 terms) plus a rapidly converging Fourier tail.
// gamma(x,y) = G(x,y) + ln|x-y|/(2pi) is the regular part; it is finite on
// the diagonal (Robin constant).
class Green {
 public:
  explicit Green(const TorusLattice& lat);

  const TorusLattice& lattice() const { return lat_; }

  // all take Cartesian positions; internally reduced mod the lattice
  double eval(Vec2 x, Vec2 y) const;      // G(x,y); throws PoleCollision at x=y
  Vec2 grad(Vec2 x, Vec2 y) const;        // grad_x G
  Mat2 hess(Vec2 x, Vec2 y) const;
  double gamma(Vec2 x, Vec2 y) const;     // finite also at x=y
  Vec2 gamma_grad(Vec2 x, Vec2 y) const;  // grad_x gamma
  double robin() const { return robin_; }

  double eta() const { return eta_; }

 private:
  double gsep(Vec2 s) const;
  TorusLattice lat_;
  double eta_;
  int nimg_;
  struct KMode {
    Vec2 k;      // physical wavevector
    double c;    // exp(-|k|^2/(4 eta^2)) / (|k|^2 |Omega|)
  };
  std::vector<KMode> modes_;
  double volume_term_;  // -1/(4 eta^2 |Omega|)
  double robin_;
};

// u0(x) = -4 pi sum_i m_i G(x, p_i)
class Background {
 public:
  Background(const TorusLattice& lat, const VortexSet& vs);

  const Green& green() const { return green_; }
  const VortexSet& vortices() const { return vs_; }
  const TorusLattice& lattice() const { return green_.lattice(); }
  int total_multiplicity() const { return vs_.total(); }

  double eval(Vec2 x) const;     // u0; throws PoleCollision at vortex points
  Vec2 grad(Vec2 x) const;
  Mat2 hess(Vec2 x) const;
  double exp_u0(Vec2 x) const;   // e^{u0}, exactly 0 at vortex points
  // smooth part around vortex i:  u0(x) - 2 m_i ln|x - p_i|
  double hat_eval(Vec2 x, std::size_t i) const;

  Vec2 vortex_xy(std::size_t i) const { return lattice().to_xy(vs_.points[i]); }
  double dist_to_nearest_vortex(Vec2 x) const;

 private:
  Green green_;
  VortexSet vs_;
  std::vector<Vec2> pxy_;
};

struct CriticalPoint {
  Vec2 q;          // lattice coordinates in [0,1)^2
  Mat2 hessian;    // of u0, Cartesian
  bool nondegenerate = false;
  int morse_index = 0;
};

// Newton search for critical points of u0 from the given seeds (lattice
// coordinates).  Seeds within `exclusion` of a vortex are skipped; converged
// points are deduplicated modulo the lattice.
std::vector<CriticalPoint> critical_points(const Background& bg,
                                           const std::vector<Vec2>& seeds,
                                           double exclusion = 1e-2);

std::vector<Vec2> coarse_seed_grid(int per_dim);

// Cached n x n samples of G(.,y0) and gamma(.,y0) for a reference pole,
// serialized to a binary file keyed by the (lattice, n) hash.
struct GreenTable {
  TorusLattice lat;
  int n = 0;
  Vec2 pole;  // lattice coordinates
  std::vector<double> G;      // n*n, row-major in (t1,t2)
  std::vector<double> gamma;  // n*n

  static GreenTable build(const Green& green, int n, Vec2 pole_lattice);
  void save(const std::string& path) const;
  static std::optional<GreenTable> load(const std::string& path);
  std::string cache_key() const;
};

}  // namespace mcs
