#include "mcslab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

#include "mcslab/errors.hpp"
#include "mcslab/kernels.hpp"

namespace mcs {

namespace {
std::mutex g_plan_mutex;  // fftw plan creation is not thread-safe
}

struct Spectral::Impl {
  fftw_plan fwd = nullptr, bwd = nullptr;
  mutable std::vector<double> rbuf;
  mutable std::vector<std::complex<double>> cbuf;

  ~Impl() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

Spectral::Spectral(const TorusLattice& lat, int n) : lat_(lat), n_(n), impl_(new Impl) {
  Field::check_size(n);
  kb1_ = lat.b1() * (2.0 * M_PI);
  kb2_ = lat.b2() * (2.0 * M_PI);
  impl_->rbuf.resize((std::size_t)n * n);
  impl_->cbuf.resize(spec_size());
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  impl_->fwd = fftw_plan_dft_r2c_2d(n, n, impl_->rbuf.data(),
                                    reinterpret_cast<fftw_complex*>(impl_->cbuf.data()),
                                    FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(impl_->cbuf.data()),
                                    impl_->rbuf.data(), FFTW_ESTIMATE);
}

Spectral::~Spectral() = default;

void Spectral::forward(const double* in, std::complex<double>* out) const {
  std::memcpy(impl_->rbuf.data(), in, sizeof(double) * (std::size_t)n_ * n_);
  fftw_execute_dft_r2c(impl_->fwd, impl_->rbuf.data(),
                       reinterpret_cast<fftw_complex*>(out));
}

void Spectral::inverse(const std::complex<double>* in, double* out) const {
  std::memcpy(impl_->cbuf.data(), in, sizeof(std::complex<double>) * spec_size());
  fftw_execute_dft_c2r(impl_->bwd, reinterpret_cast<fftw_complex*>(impl_->cbuf.data()),
                       out);
  const double s = 1.0 / ((double)n_ * n_);
  kernels::transform(out, (std::size_t)n_ * n_, [out, s](std::size_t i) { return out[i] * s; });
}

Vec2 Spectral::wavevector(int i, int jc) const {
  const int n1 = (i <= n_ / 2) ? i : i - n_;
  return kb1_ * (double)n1 + kb2_ * (double)jc;
}

Field Spectral::laplacian(const Field& f) const {
  std::vector<std::complex<double>> c(spec_size());
  forward(f.v.data(), c.data());
  for (int i = 0; i < n_; ++i)
    for (int jc = 0; jc <= n_ / 2; ++jc) {
      const Vec2 k = wavevector(i, jc);
      c[(std::size_t)i * (n_ / 2 + 1) + jc] *= -k.norm2();
    }
  Field out = like(f);
  inverse(c.data(), out.v.data());
  return out;
}

void Spectral::gradient(const Field& f, Field& dx, Field& dy) const {
  std::vector<std::complex<double>> c(spec_size()), cx(spec_size()), cy(spec_size());
  forward(f.v.data(), c.data());
  const std::complex<double> I(0.0, 1.0);
  for (int i = 0; i < n_; ++i)
    for (int jc = 0; jc <= n_ / 2; ++jc) {
      const std::size_t idx = (std::size_t)i * (n_ / 2 + 1) + jc;
      Vec2 k = wavevector(i, jc);
      // Nyquist modes carry no usable sign information for odd derivatives
      if (i == n_ / 2) k = kb2_ * (double)jc;
      if (jc == n_ / 2) k = (i == n_ / 2) ? Vec2{0, 0} : kb1_ * (double)((i <= n_ / 2) ? i : i - n_);
      cx[idx] = I * k.x * c[idx];
      cy[idx] = I * k.y * c[idx];
    }
  dx = like(f);
  dy = like(f);
  inverse(cx.data(), dx.v.data());
  inverse(cy.data(), dy.v.data());
}

Field Spectral::poisson_solve(const Field& f, double mean_tol) const {
  const double scale = std::max(1.0, f.sup_norm());
  if (std::fabs(f.mean()) > mean_tol * scale)
    throw NonZeroMean("poisson_solve requires mean-zero data, mean = " +
                      std::to_string(f.mean()));
  std::vector<std::complex<double>> c(spec_size());
  forward(f.v.data(), c.data());
  for (int i = 0; i < n_; ++i)
    for (int jc = 0; jc <= n_ / 2; ++jc) {
      const std::size_t idx = (std::size_t)i * (n_ / 2 + 1) + jc;
      const double k2 = wavevector(i, jc).norm2();
      c[idx] = (k2 == 0.0) ? 0.0 : c[idx] / (-k2);
    }
  Field out = like(f);
  inverse(c.data(), out.v.data());
  return out;
}

HelmholtzReport Spectral::helmholtz_solve(double mu, const Field& g) const {
  std::vector<std::complex<double>> c(spec_size());
  forward(g.v.data(), c.data());
  for (int i = 0; i < n_; ++i)
    for (int jc = 0; jc <= n_ / 2; ++jc) {
      const std::size_t idx = (std::size_t)i * (n_ / 2 + 1) + jc;
      const double k2 = wavevector(i, jc).norm2();
      c[idx] /= -(k2 + mu * mu);
    }
  HelmholtzReport rep;
  rep.S = like(g);
  inverse(c.data(), rep.S.v.data());
  const double gl2 = g.l2_norm(), gsup = g.sup_norm();
  rep.ratio_l2 = gl2 > 0 ? mu * mu * rep.S.l2_norm() / gl2 : 0.0;
  rep.ratio_sup = gsup > 0 ? mu * rep.S.sup_norm() / gsup : 0.0;
  rep.ratio_sup_mu2 = gsup > 0 ? mu * mu * rep.S.sup_norm() / gsup : 0.0;
  return rep;
}

Field Spectral::upsample(const Field& f, int factor) const {
  if (factor == 1) return f;
  const int m = n_ * factor;
  std::vector<std::complex<double>> c(spec_size());
  forward(f.v.data(), c.data());
  std::vector<std::complex<double>> cz((std::size_t)m * (m / 2 + 1), 0.0);
  for (int i = 0; i < n_; ++i) {
    const int ii = (i <= n_ / 2) ? i : i + (m - n_);
    for (int jc = 0; jc <= n_ / 2; ++jc) {
      std::complex<double> val = c[(std::size_t)i * (n_ / 2 + 1) + jc];
      // split Nyquist weight so the padded spectrum stays Hermitian
      if (i == n_ / 2) val *= 0.5;
      if (jc == n_ / 2) val *= 0.5;
      cz[(std::size_t)ii * (m / 2 + 1) + jc] += val;
      if (i == n_ / 2) cz[(std::size_t)(m - n_ / 2) * (m / 2 + 1) + jc] += val;
    }
  }
  // mirror of the jc = n/2 column lands outside the half-spectrum; the c2r
  // transform reconstructs it from Hermitian symmetry automatically
  Spectral fine(lat_, m);
  Field out(lat_, m);
  fine.inverse(cz.data(), out.v.data());
  const double s = (double)m * m / ((double)n_ * n_);
  kernels::transform(out.v.data(), out.v.size(),
                     [&out, s](std::size_t i) { return out.v[i] * s; });
  return out;
}

Field Spectral::mult_dealias(const Field& a, const Field& b) const {
  Field fa = upsample(a, 2), fb = upsample(b, 2);
  Field prod(lat_, 2 * n_);
  kernels::transform(prod.v.data(), prod.v.size(),
                     [&](std::size_t i) { return fa.v[i] * fb.v[i]; });
  // truncate back to n modes
  Spectral fine(lat_, 2 * n_);
  std::vector<std::complex<double>> cf(fine.spec_size());
  fine.forward(prod.v.data(), cf.data());
  std::vector<std::complex<double>> c(spec_size(), 0.0);
  const int m = 2 * n_;
  for (int i = 0; i < n_; ++i) {
    const int ii = (i <= n_ / 2) ? i : i + (m - n_);
    for (int jc = 0; jc <= n_ / 2; ++jc)
      c[(std::size_t)i * (n_ / 2 + 1) + jc] = cf[(std::size_t)ii * (m / 2 + 1) + jc];
  }
  Field out(lat_, n_);
  inverse(c.data(), out.v.data());
  // fine.forward is unnormalized on the m grid while inverse divides by n^2
  const double s = (double)n_ * n_ / ((double)m * m);
  kernels::transform(out.v.data(), out.v.size(),
                     [&out, s](std::size_t i) { return out.v[i] * s; });
  return out;
}

}  // namespace mcs
