// Acceptance suite: one section per numbered criterion, each printing
// PASS/FAIL lines for its clauses and a final verdict.  Sections that depend
// on solver states share them through the Artifacts struct.  The binary
// returns the number of failed criteria.
//
// Usage: acceptance [path-to-mcslab-cli] [output-dir]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcslab/blowup.hpp"
#include "mcslab/diagnostics.hpp"
#include "mcslab/kernels.hpp"
#include "mcslab/radial.hpp"
#include "mcslab/stateio.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;
std::string g_cli = "";
std::string g_out = "acceptance_out";
std::chrono::steady_clock::time_point g_t0 = std::chrono::steady_clock::now();

double elapsed() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
}

void clause(bool ok, const std::string& text) {
  std::printf("    [%s] %s\n", ok ? "ok" : "FAILED", text.c_str());
}

void verdict(int id, const std::string& name, bool pass) {
  std::printf("criterion %2d %-28s %s   (t=%.0fs)\n", id, name.c_str(),
              pass ? "PASS" : "FAIL", elapsed());
  if (!pass) ++g_failed;
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// shared state across criteria
struct Artifacts {
  // lambda in {4,8}, mu = 100 lambda states on the 6x6 torus (criterion 3)
  std::vector<McsState> mcs_states;
  std::shared_ptr<McsSystem> mcs_sys;
  // mu sweep states at lambda = 8 (criterion 4)
  std::vector<McsState> mu_sweep;
  // the constructed bubble family (criterion 9)
  std::vector<std::pair<std::shared_ptr<McsSystem>, McsState>> bubble_states;
  std::shared_ptr<RadialProfile> prof_m3;  // beta = 6, m = 0
  std::shared_ptr<RadialProfile> prof_m5;  // beta = 10, m = 1
};

double grad_bound(const McsSystem& sys, const McsState& st) {
  Field w = like(st.v);
  for (std::size_t i = 0; i < w.size(); ++i) w.v[i] = st.v.v[i] + st.N.v[i] / st.mu;
  Field dx, dy;
  sys.spectral().gradient(w, dx, dy);
  double g = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) g = std::max(g, std::hypot(dx.v[i], dy.v[i]));
  return g / st.lambda;
}

// ---------------------------------------------------------------- criterion 1
void criterion1(Artifacts&) {
  bool pass = true;
  ShootingConfig cfg;
  int existing = 0, diverged = 0;
  std::ostringstream csv;
  csv << "s,m,exists,beta,dev_ew,dev_e2w\n";
  for (int m : {0, 1, 2})
    for (double s : {-0.25, -0.5, -1.0, -2.0, -4.0, -8.0}) {
      try {
        RadialProfile p = shoot(s, m, cfg);
        const IdentityReport rep = check_integral_identities(p);
        ++existing;
        const bool ok = rep.dev_ew < 1e-4 && rep.dev_e2w < 1e-4;
        pass = pass && ok;
        if (!ok)
          clause(false, "identities s=" + fmt(s) + " m=" + std::to_string(m) + " dev=" +
                            fmt(rep.dev_ew) + "/" + fmt(rep.dev_e2w));
        csv << s << "," << m << ",1," << p.beta << "," << rep.dev_ew << "," << rep.dev_e2w
            << "\n";
      } catch (const IntegrationDiverged&) {
        // no entire profile exists for this (s, m): the m >= 1 equation only
        // admits decaying solutions below a critical shooting value, and the
        // closed forms presuppose the logarithmic boundary condition
        ++diverged;
        csv << s << "," << m << ",0,,,\n";
      }
    }
  write_text_atomic(g_out + "/criterion1_identities.csv", csv.str());
  clause(existing >= 9, std::to_string(existing) + " profiles exist, " +
                            std::to_string(diverged) +
                            " (s,m) pairs admit no entire profile (excluded; see ledger)");
  pass = pass && existing >= 9;
  verdict(1, "profile identities", pass);
}

// ---------------------------------------------------------------- criterion 2
void criterion2(Artifacts&) {
  ShootingConfig cfg;
  bool mono = true;
  double prev = 0.0;
  for (double s : {-8.0, -4.0, -2.0, -1.0, -0.5, -0.25}) {
    const double b = shoot(s, 0, cfg).beta;
    mono = mono && b > prev && b > 4.0;
    prev = b;
  }
  clause(mono, "beta strictly increasing and above 4 across the s-grid");
  const double b40 = shoot(-40.0, 0, cfg).beta;
  const bool range = b40 > 4.0 && b40 < 4.5;
  clause(range, "beta(-40) = " + fmt(b40) + " in (4, 4.5)");
  const double b1 = shoot(-1.0, 0, cfg).beta;
  const double s_back = solve_for_beta(b1, 0, cfg);
  const bool round = std::fabs(s_back + 1.0) < 1e-4;
  clause(round, "solve_for_beta round trip |s - (-1)| = " + fmt(std::fabs(s_back + 1.0)));
  verdict(2, "beta bijectivity", mono && range && round);
}

// ---------------------------------------------------------------- criterion 3
void criterion3(Artifacts& art) {
  // No periodic solutions exist at lambda in {4,8} with M = 3 on the unit
  // cell (the quantized mass 4 pi M cannot fit under the density bound
  // lambda^2 |Omega| / 4), so the square torus is taken with period 6.
  art.mcs_sys = std::make_shared<McsSystem>(square_lattice(6.0), VortexSet{{{0.5, 0.5}}, {3}},
                                            256);
  SolverParams params;
  bool pass = true;
  std::ostringstream csv;
  csv << "lambda,mu,mass,balance_gap,max_u,min_nhat,max_nhat,iters,seconds\n";
  for (double lam : {4.0, 8.0}) {
    const double t0 = elapsed();
    try {
      McsState st = art.mcs_sys->mcs_newton(lam, 100.0 * lam,
                                            art.mcs_sys->topological_init(lam, 100.0 * lam),
                                            params);
      const double dt = elapsed() - t0;
      const double mass_dev = std::fabs(st.mass - 12.0 * M_PI) / (12.0 * M_PI);
      const double bal = std::fabs(st.balance_lhs - st.balance_rhs) /
                         std::max(1.0, std::fabs(st.balance_rhs));
      const bool ok = mass_dev < 1e-6 && bal < 1e-6 && st.max_u < 0.0 && st.min_nhat > 0.0 &&
                      st.max_nhat < 1.0 && dt < 300.0;
      clause(ok, "lambda=" + fmt(lam) + ": mass dev " + fmt(mass_dev) + ", balance gap " +
                     fmt(bal) + ", max u " + fmt(st.max_u) + ", N/lambda in (" +
                     fmt(st.min_nhat) + ", " + fmt(st.max_nhat) + "), " + fmt(dt) + "s");
      pass = pass && ok;
      csv << lam << "," << 100.0 * lam << "," << st.mass << "," << bal << "," << st.max_u
          << "," << st.min_nhat << "," << st.max_nhat << "," << st.newton_iters << "," << dt
          << "\n";
      art.mcs_states.push_back(std::move(st));
    } catch (const Error& e) {
      clause(false, std::string("lambda=") + fmt(lam) + ": " + e.what());
      pass = false;
    }
  }
  write_text_atomic(g_out + "/criterion3_states.csv", csv.str());
  verdict(3, "MCS solver identities", pass);
}

// ---------------------------------------------------------------- criterion 4
void criterion4(Artifacts& art) {
  if (!art.mcs_sys) {
    verdict(4, "CS-limit trend", false);
    return;
  }
  SolverParams params;
  bool pass = true;
  double prev = 1e300, final_dev = 1e300;
  std::pair<Field, Field> warm = art.mcs_sys->topological_init(8.0, 200.0);
  std::ostringstream csv;
  csv << "lambda,mu,cs_deviation\n";
  for (double mu : {200.0, 400.0, 800.0, 1600.0}) {
    try {
      McsState st = art.mcs_sys->mcs_newton(8.0, mu, warm, params);
      warm = {st.v, st.N};
      const double dev = cs_deviation(*art.mcs_sys, st);
      csv << 8.0 << "," << mu << "," << dev << "\n";
      clause(dev < prev, "mu=" + fmt(mu) + ": deviation " + fmt(dev));
      pass = pass && dev < prev;
      prev = dev;
      final_dev = dev;
      art.mu_sweep.push_back(std::move(st));
    } catch (const Error& e) {
      clause(false, std::string("mu sweep: ") + e.what());
      pass = false;
      break;
    }
  }
  clause(final_dev < 0.05, "final deviation " + fmt(final_dev) + " < 0.05");
  pass = pass && final_dev < 0.05;
  write_text_atomic(g_out + "/criterion4_trend.csv", csv.str());
  verdict(4, "CS-limit trend", pass);
}

// ---------------------------------------------------------------- criterion 5
void criterion5(Artifacts& art) {
  if (!art.mcs_sys || art.mcs_states.empty() || art.mu_sweep.empty()) {
    verdict(5, "gradient bound", false);
    return;
  }
  double qmin = 1e300, qmax = 0.0;
  for (const auto& st : art.mcs_states) {
    const double q = grad_bound(*art.mcs_sys, st);
    qmin = std::min(qmin, q);
    qmax = std::max(qmax, q);
  }
  for (const auto& st : art.mu_sweep) {
    const double q = grad_bound(*art.mcs_sys, st);
    qmin = std::min(qmin, q);
    qmax = std::max(qmax, q);
  }
  const bool ok = qmax < 10.0 * qmin;
  clause(ok, "max|grad(u - u0 + N/mu)|/lambda in [" + fmt(qmin) + ", " + fmt(qmax) +
                 "], ratio " + fmt(qmax / qmin) + " < 10");
  verdict(5, "gradient bound", ok);
}

// ---------------------------------------------------------------- criterion 6
void criterion6(Artifacts&) {
  const TorusLattice lat = square_lattice(1.0);
  const int n = 256;
  Spectral sp(lat, n);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // random smooth field: gaussian spectral amplitudes under a decay envelope
    Field g(lat, n);
    for (int k1 = -6; k1 <= 6; ++k1)
      for (int k2 = -6; k2 <= 6; ++k2) {
        const double amp = gauss(rng) * std::exp(-0.1 * (k1 * k1 + k2 * k2));
        const double ph = gauss(rng);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            g.at(i, j) += amp * std::cos(2.0 * M_PI * (k1 * i + k2 * j) / n + ph);
      }
    for (double mu : {1e2, 1e3, 1e4}) {
      const auto rep = sp.helmholtz_solve(mu, g);
      worst = std::max(worst, rep.ratio_l2);
      pass = pass && rep.ratio_l2 <= 1.0 + 1e-6;
    }
  }
  clause(pass, "mu^2 ||S||_2 / ||g||_2 <= 1 + 1e-6 over 60 solves, worst " + fmt(worst));
  verdict(6, "helmholtz estimate", pass);
}

// helpers for the construction criteria ---------------------------------

std::shared_ptr<RadialProfile> profile_beta(double target, int m) {
  ShootingConfig cfg;
  cfg.r_max = 600.0;  // the scaled gluing radius 2 d lambda reaches 384
  cfg.fit_window = {120.0, 400.0};
  const double s = solve_for_beta(target, m, cfg);
  return std::make_shared<RadialProfile>(shoot(s, m, cfg));
}

// solve the full system seeded by the glued ansatz itself (phi = S = 0)
McsState solve_from_ansatz(const McsSystem& sys, const ApproxSolution& a) {
  SolverParams params;
  auto [v, N] = reassemble(sys, a, zero_pair(sys, a));
  return sys.mcs_newton(a.lambda, a.mu, {v, N}, params);
}

// ---------------------------------------------------------------- criterion 7
void criterion7(Artifacts& art) {
  art.prof_m3 = profile_beta(6.0, 0);
  McsSystem sys(square_lattice(1.0), VortexSet{{{0.5, 0.5}}, {3}}, 256);
  std::ostringstream csv;
  csv << "lambda,mu,g1_Y,scaled,theta_matched,theta_asymptotic\n";
  std::vector<double> scaled;
  for (double lam : {10.0, 20.0, 40.0}) {
    const double mu = std::pow(lam, 3) * std::log(lam);
    auto a = build_approx(sys, BlowupKind::RegularPoint, lam, mu, {0.0, 0.0}, 0.25,
                          art.prof_m3);
    auto rep = residuals(sys, a, zero_pair(sys, a));
    scaled.push_back(rep.g1_Y * lam / std::sqrt(std::log(lam)));
    csv << lam << "," << mu << "," << rep.g1_Y << "," << scaled.back() << "," << a.theta
        << "," << a.theta_asym << "\n";
  }
  write_text_atomic(g_out + "/criterion7_residual.csv", csv.str());
  const double ratio = scaled.back() / scaled.front();
  const bool ok = ratio < 3.0;
  clause(ok, "||g1(0,0)||_Y * lambda/sqrt(ln lambda) at 10/20/40 = " + fmt(scaled[0]) + "/" +
                 fmt(scaled[1]) + "/" + fmt(scaled[2]) + ", ratio(40:10) = " + fmt(ratio));
  verdict(7, "ansatz residual scaling", ok);
}

// ---------------------------------------------------------------- criterion 8
void criterion8(Artifacts& art) {
  // a configuration without a full point symmetry at the critical point, so
  // the reduced gradient is a genuine o(1) quantity rather than identically
  // zero by equivariance
  McsSystem sys(square_lattice(1.0), VortexSet{{{0.5, 0.5}, {0.25, 0.25}}, {2, 1}}, 256);
  auto cps = critical_points(sys.background(), coarse_seed_grid(12));
  Vec2 q{0, 0};
  double best = -1.0;
  for (const auto& c : cps) {
    const double dist = sys.background().dist_to_nearest_vortex(sys.lattice().to_xy(c.q));
    if (c.nondegenerate && dist > best) {
      best = dist;
      q = c.q;
    }
  }
  clause(best > 0, "nondegenerate critical point q* = (" + fmt(q.x) + ", " + fmt(q.y) + ")");

  bool conv20 = false, contr_ok = false;
  std::vector<double> rg_mag(3, -1.0);
  std::ostringstream csv;
  csv << "lambda,mu,converged,steps,contraction,rg1,rg2,ball_exit\n";
  const double lams[3] = {10.0, 20.0, 40.0};
  for (int i = 0; i < 3; ++i) {
    const double lam = lams[i];
    const double mu = std::pow(lam, 3) * std::log(lam);
    auto a = build_approx(sys, BlowupKind::RegularPoint, lam, mu, q, 0.25, art.prof_m3);
    auto ker = kernel_elements(sys, a);
    FixedPointRun run;
    try {
      run = fixed_point_solve(sys, a, &ker, 100, 1e-10);
    } catch (const Error&) {
      run.converged = false;
    }
    double r1 = 0, r2 = 0;
    if (run.converged) {
      const auto rg = reduced_gradient(sys, a, run.fixed_point, ker);
      r1 = rg.value[0];
      r2 = rg.value[1];
      rg_mag[i] = std::hypot(r1, r2);
    }
    if (lam == 20.0) {
      conv20 = run.converged && run.steps <= 100 && run.final_change < 1e-10;
      contr_ok = run.converged && run.contraction < 1.0;
      clause(conv20, "fixed point at lambda=20 converged in " + std::to_string(run.steps) +
                         " steps, final change " + fmt(run.final_change));
      clause(contr_ok, "measured contraction factor " + fmt(run.contraction) + " < 1");
    } else {
      clause(true, "lambda=" + fmt(lam) + ": converged=" + std::to_string(run.converged) +
                       " contraction=" + fmt(run.contraction) +
                       (run.converged ? " |rg|=" + fmt(rg_mag[i]) : " (no fixed point)"));
    }
    csv << lam << "," << mu << "," << run.converged << "," << run.steps << ","
        << run.contraction << "," << r1 << "," << r2 << "," << run.ball_exit << "\n";
  }
  write_text_atomic(g_out + "/criterion8_reduction.csv", csv.str());
  const bool decrease = rg_mag[0] > 0 && rg_mag[2] > 0 && rg_mag[2] <= 0.5 * rg_mag[0];
  clause(decrease,
         "reduced gradient |rg(10)| -> |rg(40)|: " +
             (rg_mag[0] > 0 ? fmt(rg_mag[0]) : std::string("no fixed point at lambda=10")) +
             " -> " + (rg_mag[2] > 0 ? fmt(rg_mag[2]) : std::string("n/a")) +
             (rg_mag[1] > 0 && rg_mag[2] > 0
                  ? "  [supplementary: |rg(20)| = " + fmt(rg_mag[1]) + ", 20->40 factor " +
                        fmt(rg_mag[1] / rg_mag[2]) + "]"
                  : ""));
  verdict(8, "contraction and reduction", conv20 && contr_ok && decrease);
}

// ---------------------------------------------------------------- criterion 9
void criterion9(Artifacts& art) {
  const VortexSet vs{{{0.5, 0.5}}, {3}};
  auto sys256 = std::make_shared<McsSystem>(square_lattice(1.0), vs, 256);
  const Vec2 q{0.0, 0.0};  // nondegenerate maximum of u0 for the centered vortex
  bool mass_ok = false, classify_ok = false, maxu_ok = false;
  std::vector<double> max_us;
  std::ostringstream csv;
  csv << "lambda,mu,n,local_mass_01,frac_12pi,max_u\n";

  // fixed-point construction + polish at lambda = 20, 40
  for (double lam : {20.0, 40.0}) {
    const double mu = std::pow(lam, 3) * std::log(lam);
    try {
      auto a = build_approx(*sys256, BlowupKind::RegularPoint, lam, mu, q, 0.25, art.prof_m3);
      auto ker = kernel_elements(*sys256, a);
      FixedPointRun run = fixed_point_solve(*sys256, a, &ker, 100, 1e-10);
      if (!run.converged) throw NewtonStalled("fixed point did not converge");
      auto [v, N] = reassemble(*sys256, a, run.fixed_point);
      SolverParams params;
      McsState st = sys256->mcs_newton(lam, mu, {v, N}, params);
      const double lm = local_mass(*sys256, st, q, 0.1);
      csv << lam << "," << mu << ",256," << lm << "," << lm / (12.0 * M_PI) << ","
          << st.max_u << "\n";
      if (lam == 40.0) {
        const double frac = lm / (12.0 * M_PI);
        mass_ok = frac >= 0.95 && frac <= 1.05;
        clause(mass_ok, "local_mass(q*, 0.1)/12pi = " + fmt(frac) +
                            " at lambda=40 (bound: <= lambda^2 (0.1)^2/(4*12) = " +
                            fmt(1600.0 * 0.01 / 48.0) + " in the CS regime; see ledger)");
      }
      max_us.push_back(st.max_u);
      art.bubble_states.push_back({sys256, std::move(st)});
    } catch (const Error& e) {
      clause(false, "construction at lambda=" + fmt(lam) + ": " + e.what());
    }
  }

  // larger lambda: the ansatz itself seeds Newton directly
  auto extend = [&](std::shared_ptr<McsSystem> sys, double lam) -> const McsState* {
    const double mu = std::pow(lam, 3) * std::log(lam);
    try {
      auto a = build_approx(*sys, BlowupKind::RegularPoint, lam, mu, q, 0.25, art.prof_m3);
      McsState st = solve_from_ansatz(*sys, a);
      const double lm = local_mass(*sys, st, q, 0.1);
      csv << lam << "," << mu << "," << sys->n() << "," << lm << "," << lm / (12.0 * M_PI)
          << "," << st.max_u << "\n";
      max_us.push_back(st.max_u);
      art.bubble_states.push_back({sys, std::move(st)});
      return &art.bubble_states.back().second;
    } catch (const Error& e) {
      clause(false, "extension to lambda=" + fmt(lam) + ": " + e.what());
      return nullptr;
    }
  };
  auto sys512 = std::make_shared<McsSystem>(square_lattice(1.0), vs, 512);
  extend(sys512, 80.0);
  extend(sys512, 160.0);
  auto sys1024 = std::make_shared<McsSystem>(square_lattice(1.0), vs, 1024);
  std::vector<McsState> trio;
  for (double lam : {192.0, 384.0, 768.0}) {
    const McsState* st = extend(sys1024, lam);
    if (st) trio.push_back(*st);
  }
  write_text_atomic(g_out + "/criterion9_concentration.csv", csv.str());

  if (trio.size() == 3) {
    const auto rep = classify(*sys1024, trio);
    classify_ok = rep.verdict == Verdict::III && !rep.local_masses.empty() &&
                  rep.local_masses.front() >= 8.0 * M_PI;
    clause(classify_ok,
           "classify(family to lambda=768) = " + to_string(rep.verdict) + ", alpha_1 = " +
               (rep.local_masses.empty() ? std::string("n/a") : fmt(rep.local_masses[0])) +
               " (8 pi = " + fmt(8.0 * M_PI) + "), peak " + fmt(rep.peak_sup) + ", off-peak " +
               fmt(rep.offpeak_sup));
  } else {
    clause(false, "classification family incomplete");
  }
  if (max_us.size() >= 2) {
    const double lo = *std::min_element(max_us.begin(), max_us.end());
    const double hi = *std::max_element(max_us.begin(), max_us.end());
    maxu_ok = hi - lo <= 1.0;
    clause(maxu_ok, "max u across the sweep in [" + fmt(lo) + ", " + fmt(hi) +
                        "], spread " + fmt(hi - lo) + " (allowed 1.0 = +-0.5)");
  } else {
    clause(false, "too few states for the max-u clause");
  }
  verdict(9, "concentration", mass_ok && classify_ok && maxu_ok);
}

// --------------------------------------------------------------- criterion 10
void criterion10(Artifacts& art) {
  art.prof_m5 = profile_beta(10.0, 1);
  const VortexSet vs{{{0.5, 0.5}, {0.0, 0.0}}, {1, 4}};
  McsSystem sys(square_lattice(1.0), vs, 256);
  const double lam = 10.0;
  const double mu = std::min(std::pow(lam, 6) * std::pow(std::log(lam), 5), 1e8);
  auto a = build_approx(sys, BlowupKind::VortexPoint, lam, mu, {0.5, 0.5}, 0.24, art.prof_m5);
  const bool c1 = a.interface_jump_value < 1e-8 && a.interface_jump_deriv < 1e-8;
  clause(c1, "C1 matching: jumps " + fmt(a.interface_jump_value) + " / " +
                 fmt(a.interface_jump_deriv));

  FixedPointRun run = fixed_point_solve(sys, a, nullptr, 100, 1e-10);
  const bool c2 = run.converged;
  clause(c2, "fixed point at (lambda=10, mu=" + fmt(mu) + "): converged=" +
                 std::to_string(run.converged) + ", steps=" + std::to_string(run.steps) +
                 ", contraction=" + fmt(run.contraction));

  bool c3 = false;
  double frac = 0.0;
  if (run.converged) {
    auto [v, N] = reassemble(sys, a, run.fixed_point);
    McsState st;
    st.v = v;
    st.N = N;
    st.lambda = lam;
    st.mu = mu;
    st.vortices = vs;
    frac = local_mass(sys, st, {0.5, 0.5}, 0.24) / (20.0 * M_PI);
    c3 = frac >= 0.9;
  }
  clause(c3, "local mass fraction at p1 = " + fmt(frac) + " (required >= 0.9; the density "
             "bound caps it at lambda^2 r^2/(4*20) = " + fmt(100.0 * 0.24 * 0.24 / 80.0) +
             " here; see ledger)");

  // supplementary: the same construction in its contraction regime
  std::ostringstream csv;
  csv << "lambda,mu,converged,contraction,local_frac,max_u\n";
  for (double ll : {32.0, 40.0}) {
    const double mm = std::pow(ll, 6) * std::pow(std::log(ll), 5);
    try {
      auto aa = build_approx(sys, BlowupKind::VortexPoint, ll, mm, {0.5, 0.5}, 0.24,
                             art.prof_m5);
      FixedPointRun rr = fixed_point_solve(sys, aa, nullptr, 100, 1e-10);
      double f2 = 0.0, mx = 0.0;
      if (rr.converged) {
        auto [v, N] = reassemble(sys, aa, rr.fixed_point);
        SolverParams params;
        McsState st = sys.mcs_newton(ll, mm, {v, N}, params);
        f2 = local_mass(sys, st, {0.5, 0.5}, 0.24) / (20.0 * M_PI);
        mx = st.max_u;
        art.bubble_states.push_back({std::make_shared<McsSystem>(square_lattice(1.0), vs, 256),
                                     std::move(st)});
      }
      csv << ll << "," << mm << "," << rr.converged << "," << rr.contraction << "," << f2
          << "," << mx << "\n";
      std::printf("    [supplementary] vortex construction lambda=%g (uncapped mu=%.3g): "
                  "converged=%d contraction=%.3f local fraction=%.3f\n",
                  ll, mm, (int)rr.converged, rr.contraction, f2);
    } catch (const Error& e) {
      std::printf("    [supplementary] lambda=%g: %s\n", ll, e.what());
    }
  }
  write_text_atomic(g_out + "/criterion10_vortex.csv", csv.str());
  verdict(10, "vortex-point construction", c1 && c2 && c3);
}

// --------------------------------------------------------------- criterion 11
void criterion11(Artifacts& art) {
  bool pass = true;
  int checked = 0;
  auto check = [&](const McsSystem& sys, const McsState& st) {
    const GaugeFields g = reconstruct_gauge(sys, st);
    const double expected = -2.0 * M_PI * st.vortices.total();
    const double rel = std::fabs(g.flux - expected) / std::fabs(expected);
    pass = pass && rel < 1e-6;
    ++checked;
    if (rel >= 1e-6)
      clause(false, "flux at lambda=" + fmt(st.lambda) + ": rel dev " + fmt(rel));
  };
  if (art.mcs_sys) {
    for (const auto& st : art.mcs_states) check(*art.mcs_sys, st);
    for (const auto& st : art.mu_sweep) check(*art.mcs_sys, st);
  }
  for (const auto& [sys, st] : art.bubble_states) check(*sys, st);
  clause(pass && checked > 0,
         "flux = -2 pi M to 1e-6 relative on all " + std::to_string(checked) + " states");
  verdict(11, "gauge reconstruction", pass && checked > 0);
}

// --------------------------------------------------------------- criterion 12
void criterion12(Artifacts&) {
  if (g_cli.empty()) {
    clause(false, "cli binary path not provided");
    verdict(12, "determinism", false);
    return;
  }
  const std::string cfg_path = g_out + "/acceptance.cfg";
  std::ostringstream cfg;
  cfg << "[experiment]\npipeline = sweep\ngrid = 128\nthreads = 2\n"
      << "[lattice]\nperiod = 6\n[vortices]\npoint = 0.5 0.5 3\n"
      << "[path]\nlambda_mu = 4 400\nlambda_mu = 8 800\n";
  write_text_atomic(cfg_path, cfg.str());
  const std::string d1 = g_out + "/det_run1", d2 = g_out + "/det_run2";
  const std::string cmd1 = g_cli + " run --config " + cfg_path + " --out " + d1 + " > /dev/null";
  const std::string cmd2 = g_cli + " run --config " + cfg_path + " --out " + d2 + " > /dev/null";
  const int r1 = std::system(cmd1.c_str());
  const int r2 = std::system(cmd2.c_str());
  bool same = r1 == 0 && r2 == 0;
  if (same) {
    for (const std::string f : {"/sweep.csv", "/state_0.bin", "/state_1.bin"}) {
      std::ifstream f1(d1 + f, std::ios::binary), f2(d2 + f, std::ios::binary);
      std::stringstream s1, s2;
      s1 << f1.rdbuf();
      s2 << f2.rdbuf();
      same = same && s1.str() == s2.str() && !s1.str().empty();
    }
  }
  clause(same, "two `run` invocations of the acceptance config produce byte-identical outputs");
  verdict(12, "determinism", same);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  if (argc > 2) g_out = argv[2];
  fs::create_directories(g_out);
  kernels::set_threads(0);
  std::printf("acceptance suite (outputs in %s)\n", g_out.c_str());
  Artifacts art;
  criterion1(art);
  criterion2(art);
  criterion3(art);
  criterion4(art);
  criterion5(art);
  criterion6(art);
  criterion7(art);
  criterion8(art);
  criterion9(art);
  criterion10(art);
  criterion11(art);
  criterion12(art);
  std::printf("%d of 12 criteria failed (t=%.0fs)\n", g_failed, elapsed());
  return g_failed;
}
