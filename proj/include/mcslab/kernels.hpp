#pragma once

#include <cstddef>
#include <functional>
#include <vector>

// Data-parallel building blocks for the grid code.  Every kernel has a serial
// reference implementation (used by the tests as ground truth) and an
// OpenMP-parallel one.  Reductions accumulate fixed-size chunks and then sum
// the chunk results in index order, so the result is bit-identical no matter
// how many threads run the chunk loop.

namespace mcs::kernels {

void set_threads(int n);  // 0 = library default (all hardware threads)
int threads();

inline constexpr std::size_t kReduceChunk = 4096;

// y[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void axpby_serial(double a, const double* x, double b, double* y, std::size_t n);

// out[i] = f(i) for arbitrary pointwise assembly
void fill(double* out, std::size_t n, const std::function<double(std::size_t)>& f);
void fill_serial(double* out, std::size_t n, const std::function<double(std::size_t)>& f);

template <class F>
void transform(double* out, std::size_t n, F&& f) {
#pragma omp parallel for schedule(static) if (threads() != 1)
  for (long long i = 0; i < (long long)n; ++i) out[i] = f((std::size_t)i);
}

double sum(const double* x, std::size_t n);
double sum_serial(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double dot_serial(const double* x, const double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);
double max_abs_serial(const double* x, std::size_t n);
double min(const double* x, std::size_t n);
double max(const double* x, std::size_t n);

inline double sum(const std::vector<double>& v) { return sum(v.data(), v.size()); }
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a.data(), b.data(), a.size());
}
inline double max_abs(const std::vector<double>& v) { return max_abs(v.data(), v.size()); }

}  // namespace mcs::kernels
