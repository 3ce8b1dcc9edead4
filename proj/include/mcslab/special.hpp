#pragma once

namespace mcs {

// exponential integral E1(x), x > 0
double expint_e1(double x);

}  // namespace mcs
