// Serial vs OpenMP comparison for the data-parallel kernels and one full
// preconditioned operator application.  Prints a table; no dependencies.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "mcslab/elliptic.hpp"
#include "mcslab/kernels.hpp"

using namespace mcs;
namespace k = mcs::kernels;

namespace {
double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double time_best(F&& f, int reps = 5) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now();
    f();
    best = std::min(best, now() - t0);
  }
  return best;
}
}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 512;
  const std::size_t sz = (std::size_t)n * n;
  std::vector<double> a(sz, 1.0), b(sz, 2.0);
  for (std::size_t i = 0; i < sz; ++i) a[i] = std::sin(0.001 * i);

  std::printf("grid %dx%d (%zu doubles)\n", n, n, sz);
  std::printf("%-22s %12s %12s %8s\n", "kernel", "serial [ms]", "openmp [ms]", "speedup");

  struct Row {
    const char* name;
    double ts, tp;
  };
  std::vector<Row> rows;

  k::set_threads(1);
  double ts = time_best([&] { k::sum_serial(a.data(), sz); });
  k::set_threads(0);
  double tp = time_best([&] { k::sum(a.data(), sz); });
  rows.push_back({"sum", ts, tp});

  k::set_threads(1);
  ts = time_best([&] { k::dot_serial(a.data(), b.data(), sz); });
  k::set_threads(0);
  tp = time_best([&] { k::dot(a.data(), b.data(), sz); });
  rows.push_back({"dot", ts, tp});

  std::vector<double> y = b;
  k::set_threads(1);
  ts = time_best([&] { k::axpby_serial(1.1, a.data(), 0.9, y.data(), sz); });
  k::set_threads(0);
  tp = time_best([&] { k::axpby(1.1, a.data(), 0.9, y.data(), sz); });
  rows.push_back({"axpby", ts, tp});

  k::set_threads(1);
  ts = time_best([&] {
    k::fill_serial(y.data(), sz, [&](std::size_t i) { return std::exp(a[i]) * b[i]; });
  });
  k::set_threads(0);
  tp = time_best([&] {
    k::fill(y.data(), sz, [&](std::size_t i) { return std::exp(a[i]) * b[i]; });
  });
  rows.push_back({"exp-assemble", ts, tp});

  // one coupled residual evaluation: FFTs stay serial, pointwise stages scale
  McsSystem sys(square_lattice(1.0), VortexSet{{{0.5, 0.5}}, {1}}, n >= 64 ? n : 64);
  auto seed = sys.topological_init(10.0, 1000.0);
  k::set_threads(1);
  ts = time_best([&] { sys.residual(10.0, 1000.0, seed.first, seed.second); }, 3);
  k::set_threads(0);
  tp = time_best([&] { sys.residual(10.0, 1000.0, seed.first, seed.second); }, 3);
  rows.push_back({"coupled residual", ts, tp});

  for (const auto& r : rows)
    std::printf("%-22s %12.3f %12.3f %8.2f\n", r.name, 1e3 * r.ts, 1e3 * r.tp, r.ts / r.tp);
  return 0;
}
