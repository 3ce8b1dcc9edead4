#pragma once

#include <functional>
#include <vector>

namespace mcs {

struct GmresOptions {
  int restart = 30;
  int max_iters = 1500;
  double tol = 1e-10;  // relative residual target
};

struct GmresResult {
  bool converged = false;
  int iters = 0;
  double residual = 0.0;  // final relative residual
};

using LinOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Right-preconditioned restarted GMRES: solves A x = b, reporting true
// residuals.  `precond` approximates A^{-1}; pass identity when absent.
GmresResult gmres(const LinOp& apply, const LinOp& precond, const std::vector<double>& b,
                  std::vector<double>& x, const GmresOptions& opts);

// Right-preconditioned BiCGStab; same contract with O(1) work vectors, used
// where the Krylov basis of a restarted GMRES would dominate memory.
GmresResult bicgstab(const LinOp& apply, const LinOp& precond, const std::vector<double>& b,
                     std::vector<double>& x, const GmresOptions& opts);

}  // namespace mcs
