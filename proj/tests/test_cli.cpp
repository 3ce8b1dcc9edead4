#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mcslab/config.hpp"

using namespace mcs;

TEST_CASE("config parser: sections, repeats, comments, errors") {
  const Config cfg = Config::parse_string(
      "top = 1\n"
      "[a]\n"
      "x = 2.5  # trailing comment\n"
      "list = 1 2 3\n"
      "rep = first\n"
      "rep = second\n"
      "[b]\n"
      "x = -7\n");
  CHECK(cfg.get_double("top") == 1.0);
  CHECK(cfg.get_double("a.x") == 2.5);
  CHECK(cfg.get_int("b.x") == -7);
  CHECK(cfg.get_doubles("a.list") == std::vector<double>{1, 2, 3});
  CHECK(cfg.get_all("a.rep").size() == 2);
  CHECK(cfg.get_string("a.rep") == "second");  // last one wins for scalars
  CHECK(cfg.get_double("missing", 9.0) == 9.0);
  CHECK_THROWS_AS(cfg.get_double("a.rep"), ConfigInvalid);
  CHECK_THROWS_AS((void)Config::parse_string("[unclosed\n"), ConfigInvalid);
  CHECK_THROWS_AS((void)Config::parse_string("novalue\n"), ConfigInvalid);
  CHECK_THROWS_AS((void)Config::parse_string("= 3\n"), ConfigInvalid);
  // error messages carry the origin and line
  try {
    Config::parse_string("x = 1\ny two\n", "demo.cfg");
    CHECK(false);
  } catch (const ConfigInvalid& e) {
    CHECK(std::string(e.what()).find("demo.cfg:2") != std::string::npos);
  }
}

#ifdef MCSLAB_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(MCSLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}
std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("cli: exit codes and byte-stable reruns") {
  // empty path list -> configuration error, exit 3
  const std::string dir = "/tmp/mcslab_cli_test";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  {
    std::ofstream f(dir + "/empty.cfg");
    f << "[experiment]\npipeline = sweep\ngrid = 64\n[lattice]\nperiod = 1\n"
         "[vortices]\npoint = 0.5 0.5 1\n";
  }
  CHECK(run_cli("run --config " + dir + "/empty.cfg --out " + dir + "/o0") == 3);
  CHECK(run_cli("run --config " + dir + "/missing.cfg --out " + dir + "/o0") != 0);

  {
    std::ofstream f(dir + "/ok.cfg");
    f << "[experiment]\npipeline = sweep\ngrid = 64\nthreads = 2\n[lattice]\nperiod = 1\n"
         "[vortices]\npoint = 0.5 0.5 1\n[path]\nlambda_mu = 10 1000\n";
  }
  CHECK(run_cli("run --config " + dir + "/ok.cfg --out " + dir + "/o1") == 0);
  CHECK(run_cli("run --config " + dir + "/ok.cfg --out " + dir + "/o2") == 0);
  const std::string a = slurp(dir + "/o1/sweep.csv"), b = slurp(dir + "/o2/sweep.csv");
  REQUIRE(!a.empty());
  CHECK(a == b);
}
#endif
