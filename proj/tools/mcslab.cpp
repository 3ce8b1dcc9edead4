// Batch entry point: subcommands for profiles, Green tables, solves, sweeps,
// the glued-ansatz construction and state diagnostics, plus a config-driven
// `run` pipeline.  All file outputs are written atomically and formatted with
// fixed precision so reruns are byte-identical.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "mcslab/blowup.hpp"
#include "mcslab/config.hpp"
#include "mcslab/diagnostics.hpp"
#include "mcslab/kernels.hpp"
#include "mcslab/radial.hpp"
#include "mcslab/stateio.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct CsvWriter {
  std::string header;
  std::vector<std::string> rows;
  void row(const std::vector<double>& vals) {
    std::string r;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) r += ",";
      r += fmt(vals[i]);
    }
    rows.push_back(r);
  }
  void write(const std::string& path) const {
    std::string out = header + "\n";
    for (const auto& r : rows) out += r + "\n";
    write_text_atomic(path, out);
  }
};

TorusLattice lattice_from(const Config& cfg) {
  TorusLattice lat = square_lattice(1.0);
  if (cfg.has("lattice.a1")) {
    const auto a1 = cfg.get_doubles("lattice.a1");
    const auto a2 = cfg.get_doubles("lattice.a2");
    if (a1.size() != 2 || a2.size() != 2) cfg.fail("lattice.a1", "expected two components");
    lat = TorusLattice{{a1[0], a1[1]}, {a2[0], a2[1]}};
  } else if (cfg.has("lattice.period")) {
    lat = square_lattice(cfg.get_double("lattice.period"));
  }
  if (!lat.valid()) cfg.fail("lattice.a1", "degenerate lattice");
  return lat;
}

VortexSet vortices_from(const Config& cfg) {
  VortexSet vs;
  for (const auto& e : cfg.get_all("vortices.point")) {
    std::istringstream ss(e.raw);
    double x, y;
    int m;
    if (!(ss >> x >> y >> m)) cfg.fail("vortices.point", "expected: t1 t2 multiplicity");
    vs.points.push_back({x, y});
    vs.multiplicities.push_back(m);
  }
  if (vs.points.empty()) cfg.fail("vortices.point", "at least one vortex required");
  return vs;
}

SolverParams solver_from(const Config& cfg) {
  SolverParams p;
  p.newton_tol = cfg.get_double("solver.newton_tol", p.newton_tol);
  p.max_iters = cfg.get_int("solver.max_iters", p.max_iters);
  p.damping = cfg.get_double("solver.damping", p.damping);
  p.continuation_steps = cfg.get_int("solver.continuation_steps", p.continuation_steps);
  if (!p.valid()) cfg.fail("solver.newton_tol", "invalid solver parameters");
  return p;
}

std::vector<std::pair<double, double>> path_from(const Config& cfg) {
  std::vector<std::pair<double, double>> path;
  for (const auto& e : cfg.get_all("path.lambda_mu")) {
    std::istringstream ss(e.raw);
    double l, m;
    if (!(ss >> l >> m)) cfg.fail("path.lambda_mu", "expected: lambda mu");
    path.push_back({l, m});
  }
  if (path.empty() && cfg.has("path.lambda_grid")) {
    // geometric generator with coupling mu = c * lambda^p * (ln lambda)^k
    const auto grid = cfg.get_doubles("path.lambda_grid");
    const double c = cfg.get_double("path.coupling_c", 1.0);
    const double p = cfg.get_double("path.coupling_p", 0.0);
    const double k = cfg.get_double("path.coupling_k", 0.0);
    for (double l : grid)
      path.push_back({l, c * std::pow(l, p) * std::pow(std::log(l), k)});
  }
  if (path.empty()) cfg.fail("path.lambda_mu", "empty parameter path");
  return path;
}

// expand a coarse list into one obeying the 25% continuation step cap
std::vector<std::pair<double, double>> densify(const std::vector<std::pair<double, double>>& p) {
  std::vector<std::pair<double, double>> out;
  out.push_back(p.front());
  for (std::size_t i = 1; i < p.size(); ++i) {
    auto [l0, m0] = out.back();
    auto [l1, m1] = p[i];
    const double steps =
        std::ceil(std::max(std::fabs(std::log(l1 / l0)), std::fabs(std::log(m1 / m0))) /
                  std::log(1.2));
    const int ns = std::max(1, (int)steps);
    for (int s = 1; s <= ns; ++s)
      out.push_back(
          {l0 * std::pow(l1 / l0, (double)s / ns), m0 * std::pow(m1 / m0, (double)s / ns)});
  }
  return out;
}

int cmd_profile(const std::string& out_dir, double s, int m, double target_beta) {
  fs::create_directories(out_dir);
  ShootingConfig cfg;
  if (target_beta > 0) s = solve_for_beta(target_beta, m, cfg);
  RadialProfile p = shoot(s, m, cfg);
  const IdentityReport rep = check_integral_identities(p);
  p.save(out_dir + "/profile.txt");
  CsvWriter csv;
  csv.header =
      "s,m,beta,beta_slope,a1,I1,r_max,int_ew,closed_ew,dev_ew,int_e2w,closed_e2w,dev_e2w";
  csv.row({p.s, (double)p.m, p.beta, p.beta_slope, p.a1, p.I1, p.r_max, rep.int_ew,
           rep.closed_ew, rep.dev_ew, rep.int_e2w, rep.closed_e2w, rep.dev_e2w});
  csv.write(out_dir + "/profile_summary.csv");
  std::printf("profile: s=%s m=%d beta=%s (identity deviations %s, %s)\n", fmt(s).c_str(), m,
              fmt(p.beta).c_str(), fmt(rep.dev_ew).c_str(), fmt(rep.dev_e2w).c_str());
  return rep.applicable && (rep.dev_ew > 1e-4 || rep.dev_e2w > 1e-4) ? 1 : 0;
}

int cmd_green(const Config& cfg, const std::string& out_dir, int n) {
  fs::create_directories(out_dir);
  const TorusLattice lat = lattice_from(cfg);
  const VortexSet vs = vortices_from(cfg);
  Green green(lat);
  Background bg(lat, vs);
  const Vec2 pole = vs.points.front();
  GreenTable table = [&] {
    const char* cache = std::getenv("MCSLAB_CACHE_DIR");
    if (cache) {
      GreenTable probe;
      probe.lat = lat;
      probe.n = n;
      const std::string path = std::string(cache) + "/" + probe.cache_key() + ".bin";
      if (auto loaded = GreenTable::load(path); loaded && loaded->n == n) return *loaded;
      GreenTable t = GreenTable::build(green, n, pole);
      fs::create_directories(cache);
      t.save(path);
      return t;
    }
    return GreenTable::build(green, n, pole);
  }();
  CsvWriter csv;
  csv.header = "t1,t2,G,gamma,u0";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 t{(double)i / n, (double)j / n};
      const Vec2 x = lat.to_xy(t);
      const double dist = bg.dist_to_nearest_vortex(x);
      csv.row({t.x, t.y, table.G[(std::size_t)i * n + j], table.gamma[(std::size_t)i * n + j],
               dist < 1e-12 ? 0.0 : bg.eval(x)});
    }
  csv.write(out_dir + "/green.csv");
  std::printf("green: wrote %dx%d table, robin constant %s\n", n, n, fmt(green.robin()).c_str());
  return 0;
}

double gradient_bound(const McsSystem& sys, const McsState& st) {
  Field w = like(st.v);
  for (std::size_t i = 0; i < w.size(); ++i) w.v[i] = st.v.v[i] + st.N.v[i] / st.mu;
  Field dx, dy;
  sys.spectral().gradient(w, dx, dy);
  double g = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) g = std::max(g, std::hypot(dx.v[i], dy.v[i]));
  return g / st.lambda;
}

int cmd_sweep(const Config& cfg, const std::string& out_dir, int n, bool parallel) {
  fs::create_directories(out_dir);
  const TorusLattice lat = lattice_from(cfg);
  const VortexSet vs = vortices_from(cfg);
  const SolverParams params = solver_from(cfg);
  McsSystem sys(lat, vs, n);
  const auto path = path_from(cfg);
  CsvWriter csv;
  csv.header =
      "lambda,mu,mass,cs_deviation,min_N,max_N_over_lambda,newton_iters,residual,max_u,"
      "grad_bound";
  std::vector<McsState> states;

  if (parallel) {
    // worker pool over independent grid points, merged in parameter order
    states.resize(path.size());
    std::vector<int> ok(path.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < (long long)path.size(); ++i) {
      try {
        const auto [l, m] = path[i];
        states[i] = sys.mcs_newton(l, m, sys.topological_init(l, m), params);
        ok[i] = 1;
      } catch (const Error&) {
        ok[i] = 0;
      }
    }
    for (std::size_t i = 0; i < path.size(); ++i)
      if (!ok[i]) return 2;
  } else {
    const auto dense = densify(path);
    const auto all = sys.continuation(dense, params);
    for (const auto& [l, m] : path)
      for (const auto& st : all)
        if (std::fabs(st.lambda - l) < 1e-9 * l && std::fabs(st.mu - m) < 1e-9 * m)
          states.push_back(st);
  }
  int exit_code = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const McsState& st = states[i];
    csv.row({st.lambda, st.mu, st.mass, cs_deviation(sys, st), st.min_nhat * st.lambda,
             st.max_nhat, (double)st.newton_iters, st.residual_norm, st.max_u,
             gradient_bound(sys, st)});
    if (st.max_u >= 0.0 || st.min_nhat <= 0.0 || st.max_nhat >= 1.0) exit_code = 1;
    save_state(st, lat, out_dir + "/state_" + std::to_string(i) + ".bin");
  }
  csv.write(out_dir + "/sweep.csv");
  std::printf("sweep: %zu states -> %s/sweep.csv\n", states.size(), out_dir.c_str());
  return exit_code;
}

int cmd_solve(const Config& cfg, const std::string& out_dir, int n, bool coupled) {
  fs::create_directories(out_dir);
  const TorusLattice lat = lattice_from(cfg);
  const VortexSet vs = vortices_from(cfg);
  const SolverParams params = solver_from(cfg);
  const auto path = path_from(cfg);
  const auto [lambda, mu] = path.front();
  McsSystem sys(lat, vs, n);
  if (coupled) {
    const McsState st = sys.mcs_newton(lambda, mu, sys.topological_init(lambda, mu), params);
    save_state(st, lat, out_dir + "/state.bin");
    std::printf("solve-mcs: lambda=%s mu=%s mass=%s iters=%d max_u=%s\n", fmt(lambda).c_str(),
                fmt(mu).c_str(), fmt(st.mass).c_str(), st.newton_iters, fmt(st.max_u).c_str());
  } else {
    const Field v = sys.cs_newton(lambda, sys.topological_init(lambda, mu).first, params);
    McsState st;
    st.v = v;
    st.N = like(v);
    const Field e = sys.exp_u(v);
    for (std::size_t i = 0; i < e.size(); ++i) st.N.v[i] = lambda * e.v[i];
    st.lambda = lambda;
    st.mu = mu;
    st.vortices = vs;
    save_state(st, lat, out_dir + "/state.bin");
    std::printf("solve-cs: lambda=%s done\n", fmt(lambda).c_str());
  }
  return 0;
}

int cmd_blowup(const Config& cfg, const std::string& out_dir, int n) {
  fs::create_directories(out_dir);
  const TorusLattice lat = lattice_from(cfg);
  const VortexSet vs = vortices_from(cfg);
  const std::string kind_s = cfg.get_string("blowup.kind", "regular");
  const BlowupKind kind = kind_s == "vortex" ? BlowupKind::VortexPoint : BlowupKind::RegularPoint;
  const double d = cfg.get_double("blowup.d", lat.injectivity_radius() / 2.0);
  const double alpha = cfg.get_double("blowup.alpha", 0.25);
  const auto grid = cfg.get_doubles("blowup.lambda_grid");
  const double cc = cfg.get_double("blowup.coupling_c", 1.0);
  const double cp = cfg.get_double("blowup.coupling_p", 3.0);
  const double ck = cfg.get_double("blowup.coupling_k", 1.0);
  const double mu_cap = cfg.get_double("blowup.mu_cap", 0.0);

  McsSystem sys(lat, vs, n);
  const int M = sys.total_multiplicity();
  ShootingConfig scfg;
  const int pm = kind == BlowupKind::VortexPoint ? 1 : 0;
  auto prof =
      std::make_shared<RadialProfile>(shoot(solve_for_beta(2.0 * M, pm, scfg), pm, scfg));

  Vec2 q;
  if (cfg.has("blowup.q")) {
    const auto qv = cfg.get_doubles("blowup.q");
    if (qv.size() != 2) cfg.fail("blowup.q", "expected two lattice coordinates");
    q = {qv[0], qv[1]};
  } else if (kind == BlowupKind::VortexPoint) {
    q = vs.points.front();
  } else {
    auto cps = critical_points(sys.background(), coarse_seed_grid(12));
    double best = -1.0;
    for (const auto& c : cps) {
      const double dist = sys.background().dist_to_nearest_vortex(lat.to_xy(c.q));
      if (c.nondegenerate && dist > best) {
        best = dist;
        q = c.q;
      }
    }
    if (best < 0) throw ConfigInvalid("no nondegenerate critical point of u0 found");
  }

  CsvWriter csv;
  csv.header =
      "lambda,mu,theta_matched,theta_asymptotic,g1_Y,g2_L2,converged,steps,contraction,"
      "ball_exit,rg1,rg2,local_mass,jump_value,jump_deriv";
  int exit_code = 0;
  for (double lam : grid) {
    double mu = cc * std::pow(lam, cp) * std::pow(std::log(lam), ck);
    if (mu_cap > 0) mu = std::min(mu, mu_cap);
    auto a = build_approx(sys, kind, lam, mu, q, d, prof);
    auto rep = residuals(sys, a, zero_pair(sys, a, alpha));
    std::unique_ptr<KernelElements> ker;
    if (kind == BlowupKind::RegularPoint)
      ker = std::make_unique<KernelElements>(kernel_elements(sys, a));
    FixedPointRun run = fixed_point_solve(sys, a, ker.get(), 100, 1e-10, alpha);
    double rg1 = 0.0, rg2 = 0.0, lm = 0.0;
    if (run.converged) {
      if (ker) {
        const auto rg = reduced_gradient(sys, a, run.fixed_point, *ker);
        rg1 = rg.value[0];
        rg2 = rg.value[1];
      }
      auto [v, N] = reassemble(sys, a, run.fixed_point);
      McsState st;
      st.v = v;
      st.N = N;
      st.lambda = lam;
      st.mu = mu;
      st.vortices = vs;
      lm = local_mass(sys, st, q, std::min(0.1, 0.45 * lat.injectivity_radius()));
    } else {
      exit_code = 2;
    }
    csv.row({lam, mu, a.theta, a.theta_asym, rep.g1_Y, rep.g2_L2, (double)run.converged,
             (double)run.steps, run.contraction, (double)run.ball_exit, rg1, rg2, lm,
             a.interface_jump_value, a.interface_jump_deriv});
  }
  csv.write(out_dir + "/blowup.csv");
  std::printf("blowup: %zu rows -> %s/blowup.csv\n", grid.size(), out_dir.c_str());
  return exit_code;
}

int cmd_diagnose(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  for (const auto& e : cfg.get_all("diagnose.state")) paths.push_back(e.raw);
  if (paths.empty()) throw ConfigInvalid("diagnose needs [diagnose] state = <file> entries");
  std::vector<LoadedState> loaded;
  for (const auto& p : paths) loaded.push_back(load_state(p));
  McsSystem sys(loaded.front().lat, loaded.front().state.vortices, loaded.front().state.v.n);
  CsvWriter csv;
  csv.header = "lambda,mu,mass,cs_deviation,flux,pohozaev,max_u";
  int exit_code = 0;
  std::vector<McsState> family;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    McsState& st = loaded[i].state;
    const double mt = mass_total(sys, st);
    const double dev = cs_deviation(sys, st);
    const GaugeFields g = reconstruct_gauge(sys, st);
    const double ph = pohozaev_residual(sys, st, st.vortices.points.front(),
                                        std::min(0.2, 0.45 * sys.lattice().injectivity_radius()));
    nlohmann::json rep;
    rep["lambda"] = st.lambda;
    rep["mu"] = st.mu;
    rep["mass_total"] = mt;
    rep["cs_deviation"] = dev;
    rep["flux"] = g.flux;
    rep["pohozaev_residual"] = ph;
    rep["max_u"] = st.max_u;
    write_text_atomic(out_dir + "/diagnose_" + std::to_string(i) + ".json", rep.dump(2) + "\n");
    csv.row({st.lambda, st.mu, mt, dev, g.flux, ph, st.max_u});
    const double expected = 4.0 * M_PI * st.vortices.total();
    if (std::fabs(mt - expected) > 1e-4 * expected) exit_code = 1;
    family.push_back(std::move(st));
  }
  if (family.size() >= 3) {
    try {
      const auto rep = classify(sys, family);
      nlohmann::json j;
      j["verdict"] = to_string(rep.verdict);
      j["far_sup_abs_u"] = rep.far_sup_abs_u;
      j["peak_sup"] = rep.peak_sup;
      j["offpeak_sup"] = rep.offpeak_sup;
      j["peaks"] = nlohmann::json::array();
      for (std::size_t i = 0; i < rep.peaks.size(); ++i)
        j["peaks"].push_back({rep.peaks[i].x, rep.peaks[i].y, rep.local_masses[i]});
      write_text_atomic(out_dir + "/classification.json", j.dump(2) + "\n");
    } catch (const ConfigInvalid&) {
      // family not ordered as a classification path; per-state reports stand
    }
  }
  csv.write(out_dir + "/diagnose.csv");
  std::printf("diagnose: %zu states -> %s/diagnose.csv\n", loaded.size(), out_dir.c_str());
  return exit_code;
}

int run_config(const std::string& config_path, const std::string& out_override,
               int grid_override, int threads) {
  const Config cfg = Config::parse_file(config_path);
  const std::string pipeline = cfg.get_string("experiment.pipeline");
  const std::string out =
      !out_override.empty() ? out_override : cfg.get_string("experiment.out", "out");
  const int n = grid_override > 0 ? grid_override : cfg.get_int("experiment.grid", 256);
  const int nthreads = threads > 0 ? threads : cfg.get_int("experiment.threads", 0);
  kernels::set_threads(nthreads);
  if (pipeline == "profile")
    return cmd_profile(out, cfg.get_double("profile.s", -1.0), cfg.get_int("profile.m", 0),
                       cfg.get_double("profile.target_beta", 0.0));
  if (pipeline == "green") return cmd_green(cfg, out, n);
  if (pipeline == "solve-cs") return cmd_solve(cfg, out, n, false);
  if (pipeline == "solve-mcs") return cmd_solve(cfg, out, n, true);
  if (pipeline == "sweep")
    return cmd_sweep(cfg, out, n, cfg.get_int("experiment.parallel_points", 0) != 0);
  if (pipeline == "blowup") return cmd_blowup(cfg, out, n);
  if (pipeline == "diagnose") return cmd_diagnose(cfg, out);
  cfg.fail("experiment.pipeline", "unknown pipeline '" + pipeline + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maxwell-Chern-Simons vortex laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  int grid = 0, threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--grid", grid, "grid size override (power of two >= 64)");
  app.add_option("--threads", threads, "worker threads (0 = all)");
  app.add_flag("--verbose", verbose, "chatty progress output");

  auto* run = app.add_subcommand("run", "execute a configured pipeline");
  auto* profile = app.add_subcommand("profile", "radial profile shooting and identities");
  double ps = -1.0, ptarget = 0.0;
  int pmm = 0;
  profile->add_option("--s", ps, "shooting value at r = 0");
  profile->add_option("--m", pmm, "vortex multiplicity of the profile");
  profile->add_option("--target-beta", ptarget, "solve for this total-mass coefficient");
  auto* green = app.add_subcommand("green", "dump Green function tables");
  auto* scs = app.add_subcommand("solve-cs", "single Chern-Simons solve");
  auto* smcs = app.add_subcommand("solve-mcs", "single coupled solve");
  auto* sweep = app.add_subcommand("sweep", "parameter sweep along a path");
  auto* blowup = app.add_subcommand("blowup", "glued-ansatz construction ledger");
  std::string bkind, blambda, bq;
  int bmass = 0;
  blowup->add_option("--kind", bkind, "regular | vortex");
  blowup->add_option("--mass", bmass, "total vortex number (cross-checked)");
  blowup->add_option("--lambda-grid", blambda, "whitespace-separated lambda values");
  blowup->add_option("--q", bq, "blow-up location (lattice coordinates)");
  auto* diagnose = app.add_subcommand("diagnose", "reports for serialized states");

  CLI11_PARSE(app, argc, argv);

  try {
    kernels::set_threads(threads);
    if (run->parsed()) {
      if (config_path.empty()) throw ConfigInvalid("run requires --config");
      return run_config(config_path, out_dir, grid, threads);
    }
    const std::string out = out_dir.empty() ? "out" : out_dir;
    std::string base;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      base = ss.str();
    }
    // fold the few dedicated command-line options into the config text
    if (blowup->parsed()) {
      base += "\n[blowup]\n";
      if (!bkind.empty()) base += "kind = " + bkind + "\n";
      if (!blambda.empty()) base += "lambda_grid = " + blambda + "\n";
      if (!bq.empty()) base += "q = " + bq + "\n";
    }
    const Config cfg = Config::parse_string(base, config_path.empty() ? "<cli>" : config_path);
    const int n = grid > 0 ? grid : cfg.get_int("experiment.grid", 256);
    if (bmass > 0 && blowup->parsed()) {
      if (vortices_from(cfg).total() != bmass)
        throw ConfigInvalid("--mass disagrees with the configured vortex set");
    }
    if (profile->parsed()) return cmd_profile(out, ps, pmm, ptarget);
    if (green->parsed()) return cmd_green(cfg, out, n);
    if (scs->parsed()) return cmd_solve(cfg, out, n, false);
    if (smcs->parsed()) return cmd_solve(cfg, out, n, true);
    if (sweep->parsed())
      return cmd_sweep(cfg, out, n, cfg.get_int("experiment.parallel_points", 0) != 0);
    if (blowup->parsed()) return cmd_blowup(cfg, out, n);
    if (diagnose->parsed()) return cmd_diagnose(cfg, out);
  } catch (const ConfigInvalid& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
