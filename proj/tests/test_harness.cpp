#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sphcoint/harness/config.hpp"
#include "sphcoint/harness/mc.hpp"
#include "sphcoint/harness/output.hpp"

using namespace sphcoint;
using namespace sphcoint::harness;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.band_limit = 3;
  c.length = 64;
  c.replications = 6;
  c.n_theta = 12;
  c.levels = {-0.3, 0.4};
  c.master_seed = 99;
  c.lag_rule = LagRule::power(0.5);
  c.report_lags = 10;
  c.excursion_times = {1, 5};
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sphcoint_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPHCOINT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text round trip", "[harness]") {
  auto c = small_config();
  c.chaos_orders = {2};
  c.length_functional = true;
  c.sigma1_case = Sigma1Case::b;
  c.sigma1_pilot = 2.5;
  const auto back = parse_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.hash() == c.hash());
}

TEST_CASE("config hash ignores runtime keys", "[harness]") {
  auto a = small_config(), b = small_config();
  b.workers = 4;
  b.output_dir = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.master_seed = 100;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("shipped configs match the presets", "[harness]") {
  const auto t1 = load_config(std::string(SPHCOINT_CONFIG_DIR) + "/paper_table1.cfg");
  const auto t2 = load_config(std::string(SPHCOINT_CONFIG_DIR) + "/paper_table2.cfg");
  CHECK(t1.hash() == paper_table1().hash());
  CHECK(t2.hash() == paper_table2().hash());
  CHECK(t1.replications == 200);
  CHECK(t1.full_replications == 1000);
  CHECK(t2.levels == std::vector<double>{-0.5, 0.5});
  CHECK_NOTHROW(t1.validate());
}

TEST_CASE("config parsing", "[harness]") {
  const auto c = parse_config(
      "# comment\n"
      "field.band_limit = 2   # trailing comment\n"
      "field.memory = 0.1, 0.2, 0.3\n"
      "levels = -1, 0.5\n"
      "functionals = area, length, chaos:2\n"
      "estimate.lag_rule = power(0.4)\n"
      "sigma1.case = none\n");
  CHECK(c.band_limit == 2);
  CHECK(c.memory == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(c.length_functional);
  CHECK(c.chaos_orders == std::vector<int>{2});
  CHECK(c.lag_rule.kind == LagRule::Kind::power);
  CHECK(c.lag_rule.exponent == 0.4);
  CHECK(c.sigma1_case == Sigma1Case::none);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors list every violation", "[harness]") {
  try {
    parse_config("time.length = four\nmc.replications = -1\nbogus.key = 1\nno equals sign\nlevels = 1\nlevels = 2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 5);
  }
  auto c = small_config();
  c.length = 4;
  c.replications = 0;
  c.levels = {0.2, 0.2};
  c.memory = {0.3, 0.3};
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 4);
  }
  auto bad_d = small_config();
  bad_d.memory = {0.5};
  CHECK_THROWS_AS(bad_d.validate(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("target layout", "[harness]") {
  auto c = small_config();
  c.levels = {-0.3, 0.4, 1.0};
  c.length_functional = true;
  c.chaos_orders = {2};
  std::vector<std::string> keys;
  for (const auto& t : target_layout(c)) keys.push_back(t.key());
  CHECK(keys == std::vector<std::string>{"field", "area[-0.3]", "area[0.4]", "area[1]", "coint_residual[-0.3;0.4]",
                                         "coint_residual[-0.3;1]", "length[-0.3]", "length[0.4]", "length[1]",
                                         "chaos2"});
}

TEST_CASE("leading multipole and case-b level", "[harness]") {
  auto c = small_config();
  c.memory = {0.1, 0.2, 0.45, 0.2};
  c.sigma1_case = Sigma1Case::b;
  const auto spec = c.spec();
  CHECK(leading_multipole(spec) == 2);
  CHECK(case_b_level(c, spec) == Approx(u_star(sigma1_true(spec), 2)));
  c.sigma1_level = 0.9;
  CHECK(case_b_level(c, spec) == 0.9);
  CHECK_THROWS(leading_multipole(MultipoleSpec::uniform(3, 0.3)));
}

TEST_CASE("smoke run emits every artifact", "[harness]") {
  ExperimentConfig c;
  c.band_limit = 2;
  c.length = 8;
  c.replications = 1;
  c.n_theta = 8;
  c.excursion_times = {1};
  const auto s = run_mc(c);
  const auto dir = scratch("smoke");
  const auto files = write_outputs(s, dir);
  CHECK(files.size() == 8);
  for (const auto& f : files) CHECK(fs::file_size(f) > 0);
  const auto fits = read_csv(dir / "fits.csv");
  CHECK(fits.size() == 1 + target_layout(c).size());
  CHECK(fits[0] == std::vector<std::string>{"target", "levels", "intercept", "slope", "q_T", "B", "T", "config_hash",
                                            "master_seed"});
  CHECK(fits[1][2] == "nan");  // q_T = 0 at T = 8 under the paper rule
}

TEST_CASE("run_mc summary contents", "[harness]") {
  auto c = small_config();
  c.length_functional = true;
  const auto s = run_mc(c);
  const auto layout = target_layout(c);
  REQUIRE(s.fits.size() == layout.size());
  CHECK(s.q_t == 8);
  for (const auto& f : s.fits) {
    CHECK(f.rho_avg.size() == 10);
    CHECK(std::isfinite(f.fit.slope));
  }
  CHECK(s.paths.size() == layout.size());
  CHECK(s.paths[0].size() == 64);
  CHECK(s.excursions.size() == 2);
  CHECK(s.excursions[0].t == 1);
  CHECK(s.excursions[1].t == 5);
  CHECK(s.means.size() == 4);
  CHECK(s.sigma1.size() == 4);  // naive and nbls_a at two levels
  CHECK(s.sigma1_truth == Approx(sigma1_true(c.spec())));

  // The residual path is Gamma_1 applied to the centered area paths.
  const double ratio = phi(-0.3) / phi(0.4);
  for (std::size_t t = 0; t < 64; ++t) CHECK(s.paths[3][t] == Approx(s.paths[1][t] - ratio * s.paths[2][t]).margin(1e-9));
}

TEST_CASE("autocov.csv normalizes by the fitted intercept", "[harness]") {
  const auto s = run_mc(small_config());
  const auto dir = scratch("autocov");
  write_outputs(s, dir);
  const auto rows = read_csv(dir / "autocov.csv");
  REQUIRE(rows[0] == std::vector<std::string>{"target", "tau", "rho_avg", "rho_normalized"});
  REQUIRE(rows.size() == 1 + s.fits.size() * 10);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = s.fits[(r - 1) / 10];
    CHECK(rows[r][0] == f.target.key());
    CHECK(std::stod(rows[r][3]) == Approx(std::stod(rows[r][2]) / std::exp(f.fit.intercept)).epsilon(1e-9));
  }
  const auto table = render_table(read_csv(dir / "fits.csv"));
  CHECK(table.find("Intercept") != std::string::npos);
  CHECK(table.find("log tau") != std::string::npos);
  CHECK(table.find("coint_residual[-0.3;0.4]") != std::string::npos);
}

TEST_CASE("results do not depend on the worker count", "[harness]") {
  auto c = small_config();
  c.replications = 9;
  c.length_functional = true;
  c.chaos_orders = {2};
  const auto d1 = scratch("w1"), d4 = scratch("w4");
  c.workers = 1;
  write_outputs(run_mc(c), d1);
  c.workers = 4;
  write_outputs(run_mc(c), d4);
  for (const char* name : {"fits.csv", "autocov.csv", "paths.csv", "excursion.csv", "sigma1.csv", "means.csv", "config.json"}) {
    INFO(name);
    CHECK(slurp(d1 / name) == slurp(d4 / name));
  }
  c.master_seed = 100;
  const auto d5 = scratch("seed100");
  write_outputs(run_mc(c), d5);
  CHECK(slurp(d1 / "fits.csv") != slurp(d5 / "fits.csv"));
}

TEST_CASE("CLI exit codes", "[harness]") {
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("--no-such-flag mc") == 2);
  CHECK(run_cli("mc --bogus") == 2);
  const auto dir = scratch("cli");
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "time.length = 2\nlevels = 0.1, 0.1\n";
  }
  CHECK(run_cli("--config " + (dir / "bad.cfg").string() + " mc") == 2);
  CHECK(run_cli("--set time.length=oops mc") == 2);
  CHECK(run_cli("--config /nonexistent.cfg mc") == 2);
}

TEST_CASE("CLI estimate-sigma1 writes relative errors", "[harness]") {
  const auto dir = scratch("cli_sigma1");
  const std::string args = "--out " + dir.string() +
                           " --set field.band_limit=3 --set time.length=64 --set mc.replications=2"
                           " --set grid.n_theta=12 estimate-sigma1 --case a --u 0.1";
  REQUIRE(run_cli(args) == 0);
  const auto rows = read_csv(dir / "sigma1.csv");
  REQUIRE(rows.size() == 3);  // header, naive, nbls_a
  const auto& h = rows[0];
  CHECK(std::find(h.begin(), h.end(), "rel_error") != h.end());
  CHECK(rows[1][0] == "naive");
  CHECK(rows[2][0] == "nbls_a");
}

TEST_CASE("CLI mc and tables", "[harness]") {
  const auto dir = scratch("cli_mc");
  const std::string set = " --set field.band_limit=3 --set time.length=64 --set mc.replications=3 --set grid.n_theta=12"
                          " --set 'estimate.lag_rule=power(0.5)'";
  REQUIRE(run_cli("--out " + dir.string() + set + " mc") == 0);
  for (const char* name : {"fits.csv", "autocov.csv", "paths.csv", "excursion.csv", "sigma1.csv", "config.json"})
    CHECK(fs::exists(dir / name));
  CHECK(run_cli("tables --in " + (dir / "fits.csv").string()) == 0);
  CHECK(run_cli("tables --in " + (dir / "missing.csv").string()) == 1);
}

TEST_CASE("naive sigma1 is unbiased on a fine grid", "[harness][slow]") {
  const auto spec = MultipoleSpec::uniform(10, 0.3);
  const double s1 = sigma1_true(spec);
  const Synthesizer synth(std::make_shared<const SphereGrid>(256), 10);
  for (double u : {0.0, 0.5}) {
    std::vector<double> est;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      const auto p = simulate_panel(spec, 2, 808, rep);
      const std::vector<double> len{boundary_length(synth(p.slice(0)), u)};
      est.push_back(naive_sigma1(len, u));
    }
    double mean = 0.0;
    for (double e : est) mean += e / static_cast<double>(est.size());
    INFO("u = " << u);
    CHECK(mean == Approx(s1).epsilon(0.02));
  }
}
