#include "mcslab/special.hpp"

#include <cmath>
#include <limits>

namespace mcs {

// Series for x <= 1, modified Lentz continued fraction for x > 1.
double expint_e1(double x) {
  if (x <= 0.0) return std::numeric_limits<double>::infinity();
  constexpr double euler = 0.57721566490153286060651209;
  if (x <= 1.0) {
    double sum = 0.0, term = 1.0;
    for (int k = 1; k <= 40; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::fabs(add) < 1e-18 * (std::fabs(sum) + 1e-300)) break;
    }
    return -euler - std::log(x) - sum;
  }
  if (x > 700.0) return 0.0;
  // E1(x) = e^{-x} * CF, CF = 1/(x+1- 1/(x+3- 4/(x+5- 9/(...))))
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 200; ++i) {
    const double a = -double(i) * double(i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

}  // namespace mcs
