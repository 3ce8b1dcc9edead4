#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "mcslab/grid.hpp"

namespace mcs {

struct HelmholtzReport {
  Field S;
  double ratio_l2 = 0.0;       // mu^2 ||S||_2 / ||g||_2
  double ratio_sup = 0.0;      // mu   ||S||_inf / ||g||_inf
  double ratio_sup_mu2 = 0.0;  // mu^2 ||S||_inf / ||g||_inf
};

// Pseudospectral operator toolbox for one grid size on one lattice.
// Plans are created with FFTW_ESTIMATE so repeated runs pick the same
// algorithm and outputs are bit-reproducible.
class Spectral {
 public:
  Spectral(const TorusLattice& lat, int n);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  int n() const { return n_; }
  const TorusLattice& lattice() const { return lat_; }

  void forward(const double* in, std::complex<double>* out) const;
  void inverse(const std::complex<double>* in, double* out) const;  // 1/n^2 applied
  std::size_t spec_size() const { return (std::size_t)n_ * (n_ / 2 + 1); }

  // physical wavevector of half-spectrum mode index
  Vec2 wavevector(int i, int jc) const;

  Field laplacian(const Field& f) const;
  void gradient(const Field& f, Field& dx, Field& dy) const;

  // solves Delta phi = f with mean-zero data; throws NonZeroMean otherwise
  Field poisson_solve(const Field& f, double mean_tol = 1e-10) const;
  // solves Delta S - mu^2 S = g and reports the measured operator ratios
  HelmholtzReport helmholtz_solve(double mu, const Field& g) const;

  // product with 2x zero-padded dealiasing
  Field mult_dealias(const Field& a, const Field& b) const;

  // trigonometric upsampling to factor*n (factor a power of two)
  Field upsample(const Field& f, int factor) const;

 private:
  TorusLattice lat_;
  int n_;
  Vec2 kb1_, kb2_;  // 2*pi*dual basis
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mcs
