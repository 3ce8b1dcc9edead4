#include "mcslab/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcs::kernels {

namespace {
int g_threads = 0;

std::size_t nchunks(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

template <class ChunkOp>
double chunked_reduce(std::size_t n, double init, ChunkOp&& op, bool maximize) {
  const std::size_t nc = nchunks(n);
  std::vector<double> partial(nc, init);
#pragma omp parallel for schedule(static) if (threads() != 1)
  for (long long c = 0; c < (long long)nc; ++c) {
    const std::size_t lo = (std::size_t)c * kReduceChunk;
    const std::size_t hi = std::min(n, lo + kReduceChunk);
    partial[c] = op(lo, hi);
  }
  double acc = init;
  for (std::size_t c = 0; c < nc; ++c)
    acc = maximize ? std::max(acc, partial[c]) : acc + partial[c];
  return acc;
}
}  // namespace

void set_threads(int n) {
  g_threads = n;
  if (n > 0) omp_set_num_threads(n);
}

int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
#pragma omp parallel for schedule(static) if (threads() != 1)
  for (long long i = 0; i < (long long)n; ++i) y[i] = a * x[i] + b * y[i];
}

void axpby_serial(double a, const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void fill(double* out, std::size_t n, const std::function<double(std::size_t)>& f) {
#pragma omp parallel for schedule(static) if (threads() != 1)
  for (long long i = 0; i < (long long)n; ++i) out[i] = f((std::size_t)i);
}

void fill_serial(double* out, std::size_t n, const std::function<double(std::size_t)>& f) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

double sum(const double* x, std::size_t n) {
  return chunked_reduce(
      n, 0.0,
      [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i];
        return s;
      },
      false);
}

double sum_serial(const double* x, std::size_t n) {
  // same chunking as the parallel path so both give identical rounding
  const std::size_t nc = nchunks(n);
  double acc = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t lo = c * kReduceChunk, hi = std::min(n, lo + kReduceChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    acc += s;
  }
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  return chunked_reduce(
      n, 0.0,
      [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
        return s;
      },
      false);
}

double dot_serial(const double* x, const double* y, std::size_t n) {
  const std::size_t nc = nchunks(n);
  double acc = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t lo = c * kReduceChunk, hi = std::min(n, lo + kReduceChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
    acc += s;
  }
  return acc;
}

double max_abs(const double* x, std::size_t n) {
  return chunked_reduce(
      n, 0.0,
      [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s = std::max(s, std::fabs(x[i]));
        return s;
      },
      true);
}

double max_abs_serial(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::fabs(x[i]));
  return s;
}

double min(const double* x, std::size_t n) {
  return -chunked_reduce(
      n, -std::numeric_limits<double>::infinity(),
      [&](std::size_t lo, std::size_t hi) {
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) s = std::max(s, -x[i]);
        return s;
      },
      true);
}

double max(const double* x, std::size_t n) {
  return chunked_reduce(
      n, -std::numeric_limits<double>::infinity(),
      [&](std::size_t lo, std::size_t hi) {
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) s = std::max(s, x[i]);
        return s;
      },
      true);
}

}  // namespace mcs::kernels
