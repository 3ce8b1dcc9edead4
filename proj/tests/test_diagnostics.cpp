#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "mcslab/diagnostics.hpp"
#include "mcslab/kernels.hpp"
#include "mcslab/stateio.hpp"

using namespace mcs;

namespace {
struct Solved {
  std::unique_ptr<McsSystem> sys;
  McsState st;
  Solved() {
    sys = std::make_unique<McsSystem>(square_lattice(1.0), VortexSet{{{0.5, 0.5}}, {1}}, 128);
    SolverParams params;
    st = sys->mcs_newton(10.0, 1000.0, sys->topological_init(10.0, 1000.0), params);
  }
};
Solved& solved() {
  static Solved s;
  return s;
}
}  // namespace

TEST_CASE("mass_total and local_mass exhaustion") {
  auto& S = solved();
  const double total = mass_total(*S.sys, S.st);
  CHECK(total == doctest::Approx(4.0 * M_PI).epsilon(1e-8));
  // ball growing toward half the injectivity radius captures almost all mass
  // minus the far-field contribution; compare against direct quadratures
  const double lm = local_mass(*S.sys, S.st, {0.5, 0.5}, 0.245);
  CHECK(lm < total);
  CHECK(lm > 0.0);
  CHECK_THROWS_AS(local_mass(*S.sys, S.st, {0.5, 0.5}, 0.3), ConfigInvalid);
  // density nonnegative up to solver tolerance
  const Field e = S.sys->exp_u(S.st.v);
  for (std::size_t i = 0; i < e.size(); ++i)
    CHECK(e.v[i] * (1.0 - S.st.N.v[i] / S.st.lambda) > -1e-9);
}

TEST_CASE("cs_deviation: exact zero for a manufactured CS pair") {
  auto& S = solved();
  McsState fake = S.st;
  const Field e = S.sys->exp_u(fake.v);
  kernels::transform(fake.N.v.data(), fake.N.v.size(),
                     [&](std::size_t i) { return fake.lambda * e.v[i]; });
  CHECK(cs_deviation(*S.sys, fake) < 1e-14);
  CHECK(cs_deviation(*S.sys, S.st) > 0.0);
}

TEST_CASE("pohozaev residual: small on solutions, order one on junk") {
  auto& S = solved();
  const double r1 = pohozaev_residual(*S.sys, S.st, {0.5, 0.5}, 0.2);
  INFO("residual at vortex center: ", r1);
  CHECK(r1 < 1e-4);
  const double r2 = pohozaev_residual(*S.sys, S.st, {0.1, 0.15}, 0.2);
  CHECK(r2 < 1e-4);
  // two radii give comparable (small) residuals
  const double r3 = pohozaev_residual(*S.sys, S.st, {0.5, 0.5}, 0.1);
  CHECK(r3 < 1e-3);
  // random non-solution field trips the detector
  McsState junk = S.st;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& x : junk.v.v) x += u(rng);
  CHECK(pohozaev_residual(*S.sys, junk, {0.5, 0.5}, 0.2) > 1e-2);
}

TEST_CASE("gauge reconstruction: flux quantization, bounds, round trip") {
  auto& S = solved();
  const GaugeFields g = reconstruct_gauge(*S.sys, S.st);
  CHECK(g.q_sq == doctest::Approx(S.st.lambda * S.st.mu / 2.0));
  CHECK(g.flux == doctest::Approx(-2.0 * M_PI * 1).epsilon(1e-9));
  for (std::size_t i = 0; i < g.phi_sq.size(); ++i) {
    CHECK(g.phi_sq.v[i] >= 0.0);
    CHECK(g.phi_sq.v[i] < 1.0);
    CHECK(g.A0.v[i] > g.q_sq / S.st.mu - S.st.lambda / 2.0);
  }
  // round trip: (|phi|^2, n) -> (u, N) is the identity
  for (std::size_t i = 0; i < g.n.v.size(); ++i)
    CHECK(2.0 * g.n.v[i] == doctest::Approx(S.st.N.v[i]).epsilon(1e-14));
}

namespace {
// v such that u_field(v) equals the prescribed u away from the vortex cores,
// with the pole cells pushed far negative instead of cancelled exactly
Field manufactured_v(const McsSystem& sys, const std::function<double(Vec2)>& u_target) {
  const int n = sys.n();
  Field v(sys.lattice(), n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x = v.point(i, j);
      double logs = 0.0;
      for (std::size_t k = 0; k < sys.vortices().size(); ++k) {
        const double r = sys.lattice().dist(x, sys.lattice().to_xy(sys.vortices().points[k]));
        logs += 2.0 * sys.vortices().multiplicities[k] * std::log(std::max(r, 1e-8));
      }
      v.at(i, j) = u_target(x) - sys.u0_smooth().at(i, j) - std::max(logs, -30.0);
    }
  return v;
}
}  // namespace

TEST_CASE("classify: the three regimes separate") {
  auto& S = solved();
  const TorusLattice lat = S.sys->lattice();
  const int n = S.sys->n();
  auto make = [&](double lam, Field v, Field N) {
    McsState st;
    st.v = std::move(v);
    st.N = std::move(N);
    st.lambda = lam;
    st.mu = 100.0 * lam * lam;
    st.vortices = S.sys->vortices();
    return st;
  };

  // family I: genuinely solved topological states along a lambda path
  {
    SolverParams params;
    std::vector<McsState> fam;
    std::pair<Field, Field> warm = S.sys->topological_init(40.0, 4000.0);
    for (double lam : {40.0, 50.0, 62.0}) {
      const McsState st = S.sys->mcs_newton(lam, 100.0 * lam, warm, params);
      warm = {st.v, st.N};
      fam.push_back(st);
    }
    const auto rep = classify(*S.sys, fam);
    INFO("far sup |u| = ", rep.far_sup_abs_u);
    CHECK(rep.verdict == Verdict::I);
  }

  // family II: u = -2 ln lambda + fixed regular profile, by construction
  {
    std::vector<McsState> fam;
    for (double lam : {10.0, 12.0, 15.0}) {
      Field v = manufactured_v(*S.sys, [&](Vec2 x) {
        return -2.0 * std::log(lam) + std::sin(2.0 * M_PI * x.x);
      });
      Field N(lat, n, 0.5 * lam);
      fam.push_back(make(lam, std::move(v), std::move(N)));
    }
    CHECK(classify(*S.sys, fam).verdict == Verdict::II);
  }

  // family III: sharpening gaussian bump carrying mass 12 pi at a fixed q;
  // the density peak lambda^2 e^u = 12 lambda^2 makes u + 2 ln lambda diverge
  const Vec2 q{0.15, 0.2};
  auto bump_state = [&](double lam) {
    Field v = manufactured_v(*S.sys, [&](Vec2 x) {
      const double r = lat.dist(x, lat.to_xy(q));
      return std::log(12.0) - lam * lam * r * r;
    });
    Field N(lat, n, 1e-4 * lam);
    return make(lam, std::move(v), std::move(N));
  };
  std::vector<McsState> fam3{bump_state(30.0), bump_state(40.0), bump_state(55.0)};
  const auto rep3 = classify(*S.sys, fam3);
  INFO("peak=", rep3.peak_sup, " off=", rep3.offpeak_sup);
  CHECK(rep3.verdict == Verdict::III);
  REQUIRE(rep3.peaks.size() == 1);
  CHECK(lat.dist(lat.to_xy(rep3.peaks[0]), lat.to_xy(q)) < 0.02);
  CHECK(rep3.local_masses[0] >= 8.0 * M_PI - 0.5);
  CHECK(rep3.local_masses[0] == doctest::Approx(12.0 * M_PI).epsilon(0.05));

  // appending more states along the same path never flips the verdict
  fam3.push_back(bump_state(70.0));
  CHECK(classify(*S.sys, fam3).verdict == Verdict::III);

  std::vector<McsState> short_family{fam3[0], fam3[1]};
  CHECK_THROWS_AS(classify(*S.sys, short_family, {}), ConfigInvalid);
}

TEST_CASE("state container round-trips") {
  auto& S = solved();
  const std::string path = "/tmp/mcslab_state_test.bin";
  save_state(S.st, S.sys->lattice(), path);
  auto loaded = load_state(path);
  CHECK(loaded.state.lambda == S.st.lambda);
  CHECK(loaded.state.v.v == S.st.v.v);
  CHECK(loaded.state.N.v == S.st.N.v);
  CHECK(loaded.state.vortices.points[0].x == S.st.vortices.points[0].x);
}
