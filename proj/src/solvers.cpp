#include "mcslab/solvers.hpp"

#include <cmath>

#include "mcslab/kernels.hpp"

namespace mcs {

GmresResult gmres(const LinOp& apply, const LinOp& precond, const std::vector<double>& b,
                  std::vector<double>& x, const GmresOptions& opts) {
  const std::size_t n = b.size();
  const int m = opts.restart;
  GmresResult res;
  const double bnorm = std::sqrt(kernels::dot(b, b));
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  if (x.size() != n) x.assign(n, 0.0);

  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<std::vector<double>> Z(m, std::vector<double>(n));
  std::vector<double> H((m + 1) * m, 0.0), cs(m), sn(m), g(m + 1);
  std::vector<double> w(n), tmp(n);

  auto Hat = [&](int i, int j) -> double& { return H[(std::size_t)i * m + j]; };

  while (res.iters < opts.max_iters) {
    apply(x, w);
    kernels::axpby(1.0, b.data(), -1.0, w.data(), n);  // w = b - A x
    double beta = std::sqrt(kernels::dot(w, w));
    res.residual = beta / bnorm;
    if (res.residual < opts.tol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) V[0][i] = w[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;
    for (; k < m && res.iters < opts.max_iters; ++k, ++res.iters) {
      precond(V[k], Z[k]);
      apply(Z[k], w);
      for (int i = 0; i <= k; ++i) {
        Hat(i, k) = kernels::dot(w, V[i]);
        kernels::axpby(-Hat(i, k), V[i].data(), 1.0, w.data(), n);
      }
      Hat(k + 1, k) = std::sqrt(kernels::dot(w, w));
      if (Hat(k + 1, k) > 1e-300)
        for (std::size_t i = 0; i < n; ++i) V[k + 1][i] = w[i] / Hat(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * Hat(i, k) + sn[i] * Hat(i + 1, k);
        Hat(i + 1, k) = -sn[i] * Hat(i, k) + cs[i] * Hat(i + 1, k);
        Hat(i, k) = t;
      }
      const double d = std::hypot(Hat(k, k), Hat(k + 1, k));
      cs[k] = Hat(k, k) / d;
      sn[k] = Hat(k + 1, k) / d;
      Hat(k, k) = d;
      Hat(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.residual = std::fabs(g[k + 1]) / bnorm;
      if (res.residual < opts.tol) {
        ++k;
        ++res.iters;
        break;
      }
    }
    // back substitution and update
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= Hat(i, j) * y[j];
      y[i] = s / Hat(i, i);
    }
    for (int j = 0; j < k; ++j) kernels::axpby(y[j], Z[j].data(), 1.0, x.data(), n);
    if (res.residual < opts.tol) {
      res.converged = true;
      return res;
    }
    if (k == 0) break;
  }
  // final true residual
  apply(x, w);
  kernels::axpby(1.0, b.data(), -1.0, w.data(), n);
  res.residual = std::sqrt(kernels::dot(w, w)) / bnorm;
  res.converged = res.residual < opts.tol;
  return res;
}

GmresResult bicgstab(const LinOp& apply, const LinOp& precond, const std::vector<double>& b,
                     std::vector<double>& x, const GmresOptions& opts) {
  const std::size_t n = b.size();
  GmresResult res;
  const double bnorm = std::sqrt(kernels::dot(b, b));
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  if (x.size() != n) x.assign(n, 0.0);
  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  apply(x, r);
  kernels::axpby(1.0, b.data(), -1.0, r.data(), n);
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (; res.iters < opts.max_iters; ++res.iters) {
    const double rnorm = std::sqrt(kernels::dot(r, r));
    res.residual = rnorm / bnorm;
    if (res.residual < opts.tol) {
      res.converged = true;
      return res;
    }
    const double rho1 = kernels::dot(r0, r);
    if (std::fabs(rho1) < 1e-290) break;  // breakdown; restart with fresh shadow
    if (res.iters == 0) {
      p = r;
    } else {
      const double beta = (rho1 / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho1;
    precond(p, ph);
    apply(ph, v);
    alpha = rho / kernels::dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    precond(s, sh);
    apply(sh, t);
    const double tt = kernels::dot(t, t);
    omega = tt > 0 ? kernels::dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    if (omega == 0.0) break;
  }
  apply(x, t);
  kernels::axpby(1.0, b.data(), -1.0, t.data(), n);
  res.residual = std::sqrt(kernels::dot(t, t)) / bnorm;
  res.converged = res.residual < opts.tol;
  return res;
}

}  // namespace mcs
