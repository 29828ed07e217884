// sphcoint command-line driver.
//
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sphcoint/coint.hpp"
#include "sphcoint/fgn.hpp"
#include "sphcoint/functionals.hpp"
#include "sphcoint/harness/config.hpp"
#include "sphcoint/harness/mc.hpp"
#include "sphcoint/harness/output.hpp"
#include "sphcoint/spectral.hpp"
#include "sphcoint/sphere.hpp"

namespace fs = std::filesystem;
using namespace sphcoint;
using namespace sphcoint::harness;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

ExperimentConfig resolve(const GlobalOptions& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  std::vector<std::string> violations;
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      violations.push_back("--set expects key=value, got '" + kv + "'");
      continue;
    }
    apply_setting(c, harness::detail::trim(kv.substr(0, eq)), kv.substr(eq + 1), violations);
  }
  if (!violations.empty()) throw ConfigError(std::move(violations));
  if (g.seed) c.master_seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (g.out) c.output_dir = *g.out;
  c.validate();
  return c;
}

std::string csv_num(double x) { return fmt(x); }

void report(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

// simulate: coefficient panel and the first few synthesized slices.
void cmd_simulate(const ExperimentConfig& c, std::size_t replication, std::size_t n_slices) {
  const auto spec = c.spec();
  const auto panel = simulate_panel(spec, c.length, c.master_seed, replication);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);

  std::ostringstream pc;
  pc << "t,ell,m,value\n";
  for (std::size_t t = 0; t < c.length; ++t)
    for (int ell = 0; ell <= spec.band_limit(); ++ell)
      for (int m = -ell; m <= ell; ++m) pc << t + 1 << ',' << ell << ',' << m << ',' << csv_num(panel.at(ell, m, t)) << '\n';
  write_file(dir / "panel.csv", pc.str());

  auto grid = std::make_shared<const SphereGrid>(c.n_theta);
  const Synthesizer synth(grid, spec.band_limit());
  std::ostringstream sc;
  sc << "t,theta,phi,value\n";
  for (std::size_t t = 0; t < std::min(n_slices, c.length); ++t) {
    const auto slice = synth(panel.slice(t), t);
    for (int i = 0; i < grid->n_theta(); ++i)
      for (int j = 0; j < grid->n_phi(); ++j)
        sc << t + 1 << ',' << csv_num(grid->theta(i)) << ',' << csv_num(grid->phi(j)) << ','
           << csv_num(slice.values[grid->index(i, j)]) << '\n';
  }
  write_file(dir / "slices.csv", sc.str());
  report({dir / "panel.csv", dir / "slices.csv"});
}

struct RawSeries {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};

// Uncentered functionals of one replication at every configured level.
RawSeries extract(const ExperimentConfig& c, std::size_t replication) {
  const auto spec = c.spec();
  const auto panel = simulate_panel(spec, c.length, c.master_seed, replication);
  auto grid = std::make_shared<const SphereGrid>(c.n_theta);
  const Synthesizer synth(grid, spec.band_limit());
  RawSeries r;
  r.names.emplace_back("field");
  for (double u : c.levels) r.names.push_back("area[" + Target::format_level(u) + "]");
  for (double u : c.levels) r.names.push_back("length[" + Target::format_level(u) + "]");
  for (int q : c.chaos_orders) r.names.push_back("chaos" + std::to_string(q));
  r.columns.assign(r.names.size(), std::vector<double>(c.length));
  for (std::size_t t = 0; t < c.length; ++t) {
    const auto slice = synth(panel.slice(t), t);
    std::size_t k = 0;
    r.columns[k++][t] = slice.north_pole;
    for (double u : c.levels) r.columns[k++][t] = excursion_area(slice, u);
    for (double u : c.levels) r.columns[k++][t] = boundary_length(slice, u);
    for (int q : c.chaos_orders) r.columns[k++][t] = chaos_projection(slice, q);
  }
  return r;
}

std::string wide_csv(const RawSeries& r) {
  std::ostringstream os;
  os << 't';
  for (const auto& n : r.names) os << ',' << n;
  os << '\n';
  const std::size_t n = r.columns.empty() ? 0 : r.columns.front().size();
  for (std::size_t t = 0; t < n; ++t) {
    os << t + 1;
    for (const auto& col : r.columns) os << ',' << csv_num(col[t]);
    os << '\n';
  }
  return os.str();
}

void cmd_functionals(const ExperimentConfig& c, std::size_t replication) {
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  write_file(dir / "functionals.csv", wide_csv(extract(c, replication)));
  report({dir / "functionals.csv"});
}

MemoryCase parse_case(const std::string& s) {
  if (s == "a") return MemoryCase::a;
  if (s == "b") return MemoryCase::b;
  if (s == "boundary") return MemoryCase::boundary;
  throw ConfigError({"--case must be a, b or boundary"});
}

// cointegrate: bases of the area and length spaces, and Gamma_1 residuals of
// the centered areas of one replication.
void cmd_cointegrate(const ExperimentConfig& c, const std::string& case_name, std::size_t replication) {
  if (c.levels.size() < 2) throw ConfigError({"cointegrate needs at least two levels"});
  const MemoryCase mc = parse_case(case_name);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);

  std::vector<CointBasis> bases;
  bases.push_back(area_coint_space(c.levels, mc));
  const std::size_t need_len = mc == MemoryCase::a ? 2 : (mc == MemoryCase::b ? 3 : 4);
  if (c.levels.size() >= need_len) bases.push_back(length_coint_space(c.levels, mc));
  const Matrix g1 = gamma1(c.levels);

  std::ostringstream bc;
  bc << "space,row";
  for (std::size_t k = 0; k < c.levels.size(); ++k) bc << ",coef_" << k + 1;
  bc << ",annihilation_error\n";
  auto emit = [&](const std::string& name, const Matrix& basis, double err) {
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      bc << name << ',' << r + 1;
      for (Eigen::Index k = 0; k < basis.cols(); ++k) bc << ',' << csv_num(basis(r, k));
      bc << ',' << csv_num(err) << '\n';
    }
  };
  emit("gamma1", g1, (g1 * xa_matrix(c.levels, 0).transpose()).cwiseAbs().maxCoeff());
  for (const auto& b : bases) emit(to_string(b.label), b.basis, b.annihilation_error());
  write_file(dir / "coint_bases.csv", bc.str());

  const auto raw = extract(c, replication);
  std::vector<FunctionalSeries> areas;
  for (std::size_t k = 0; k < c.levels.size(); ++k) {
    FunctionalSeries s{FunctionalKind::area, c.levels[k], 0, raw.columns[1 + k]};
    areas.push_back(s.centered_by(expected_area(c.levels[k])));
  }
  RawSeries res;
  for (Eigen::Index r = 0; r < g1.rows(); ++r) {
    res.names.push_back("coint_residual[" + Target::format_level(c.levels[0]) + ";" +
                        Target::format_level(c.levels[static_cast<std::size_t>(r) + 1]) + "]");
    res.columns.push_back(residual_series(areas, g1.row(r).transpose()).values);
  }
  write_file(dir / "residuals.csv", wide_csv(res));
  report({dir / "coint_bases.csv", dir / "residuals.csv"});
}

void cmd_estimate_sigma1(ExperimentConfig c, const std::string& case_name, std::optional<double> u,
                         std::optional<double> pilot) {
  c.area = true;
  c.length_functional = false;
  c.chaos_orders.clear();
  c.excursion_times.clear();
  if (pilot) c.sigma1_pilot = pilot;
  if (case_name == "a") {
    c.sigma1_case = Sigma1Case::a;
    if (u) c.levels = {*u};
  } else if (case_name == "b") {
    c.sigma1_case = Sigma1Case::b;
    if (u) c.sigma1_level = *u;
    c.levels = {case_b_level(c, c.spec())};
  } else {
    throw ConfigError({"--case must be a or b"});
  }
  c.validate();
  const auto summary = run_mc(c);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  write_file(dir / "sigma1.csv", sigma1_csv(summary));
  std::cout << sigma1_csv(summary);
  report({dir / "sigma1.csv"});
}

// spectrum: periodograms of one replication's centered series, averaged
// periodograms at the bandwidth, and the conjecture probe for order q.
void cmd_spectrum(const ExperimentConfig& c, int q, std::size_t probe_reps, std::size_t replication) {
  const auto spec = c.spec();
  auto raw = extract(c, replication);
  const double s1 = sigma1_true(spec);
  for (std::size_t k = 0; k < c.levels.size(); ++k) {
    for (double& v : raw.columns[1 + k]) v -= expected_area(c.levels[k]);
    for (double& v : raw.columns[1 + c.levels.size() + k]) v -= expected_length(c.levels[k], s1);
  }
  const std::size_t T = c.length, m = c.bandwidth();
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);

  std::vector<std::vector<double>> pg;
  for (const auto& col : raw.columns) pg.push_back(periodogram(col));
  std::ostringstream sp;
  sp << "j,lambda";
  for (const auto& n : raw.names) sp << ',' << n;
  sp << '\n';
  for (std::size_t j = 1; j < pg.front().size(); ++j) {
    sp << j << ',' << csv_num(fourier_frequency(j, T));
    for (const auto& p : pg) sp << ',' << csv_num(p[j]);
    sp << '\n';
  }
  write_file(dir / "spectrum.csv", sp.str());

  std::ostringstream fh;
  fh << "series,m,lambda_m,F_hat\n";
  for (std::size_t k = 0; k < raw.names.size(); ++k)
    fh << raw.names[k] << ',' << m << ',' << csv_num(fourier_frequency(m, T)) << ','
       << csv_num(averaged_periodogram(raw.columns[k], m)) << '\n';
  write_file(dir / "fhat.csv", fh.str());

  const auto probe = conjecture_probe(spec, q, T, m, probe_reps, c.master_seed, c.workers);
  std::ostringstream pr;
  pr << "q,T,m,B,model_F,median_ratio,lower_quartile,upper_quartile\n";
  pr << probe.q << ',' << probe.length << ',' << probe.bandwidth << ',' << probe.replications << ','
     << csv_num(probe.model_F) << ',' << csv_num(probe.median) << ',' << csv_num(probe.lower_quartile) << ','
     << csv_num(probe.upper_quartile) << '\n';
  write_file(dir / "probe.csv", pr.str());
  std::cout << pr.str();
  report({dir / "spectrum.csv", dir / "fhat.csv", dir / "probe.csv"});
}

void cmd_mc(ExperimentConfig c, bool full) {
  if (full) c.replications = c.full_replications;
  std::cerr << "mc: B=" << c.replications << " T=" << c.length << " L=" << c.band_limit << " n_theta=" << c.n_theta
            << " workers=" << c.workers << " hash=" << c.hash() << '\n';
  const auto summary = run_mc(c);
  report(write_outputs(summary, c.output_dir));
  std::cout << render_table(read_csv(fs::path(c.output_dir) / "fits.csv"));
  std::cout << "q_T = " << summary.q_t << ", B = " << c.replications << ", T = " << c.length
            << ", elapsed " << summary.elapsed_seconds << " s\n";
}

void cmd_tables(const fs::path& in) { std::cout << render_table(read_csv(in)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excursion functionals of long-memory spherical fields: simulation, cointegration, estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(SPHCOINT_VERSION) + " (" + build_tag() + ")");

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides mc.master_seed)");
  app.add_option("--workers", g.workers, "Worker threads (overrides mc.workers)")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory (overrides output.dir)");
  app.add_option("--set", g.overrides, "Extra key=value setting, repeatable");

  std::size_t replication = 0, n_slices = 1, probe_reps = 100;
  std::string case_name = "a";
  std::optional<double> u, pilot;
  int q = 1;
  bool full = false;
  std::string table_in;

  auto* simulate = app.add_subcommand("simulate", "Simulate a coefficient panel and synthesize slices");
  simulate->add_option("--replication", replication, "Replication index");
  simulate->add_option("--slices", n_slices, "Number of slices to write");

  auto* functionals = app.add_subcommand("functionals", "Extract field, area, length and chaos series");
  functionals->add_option("--replication", replication, "Replication index");

  auto* cointegrate = app.add_subcommand("cointegrate", "Cointegrating bases and residuals");
  cointegrate->add_option("--case", case_name, "Memory case: a, b or boundary");
  cointegrate->add_option("--replication", replication, "Replication index");

  auto* estimate = app.add_subcommand("estimate-sigma1", "Naive and narrow-band estimates of sigma1");
  estimate->add_option("--case", case_name, "Estimator case: a or b")->check(CLI::IsMember({"a", "b"}));
  estimate->add_option("--u", u, "Level (case a) or level replacing u* (case b)");
  estimate->add_option("--pilot", pilot, "Pilot sigma1 for u* (case b)");

  auto* spectrum = app.add_subcommand("spectrum", "Periodograms, averaged periodograms, conjecture probe");
  spectrum->add_option("--q", q, "Chaos order for the probe")->check(CLI::PositiveNumber);
  spectrum->add_option("--probe-reps", probe_reps, "Replications for the probe")->check(CLI::PositiveNumber);
  spectrum->add_option("--replication", replication, "Replication for the periodograms");

  auto* mc = app.add_subcommand("mc", "Full Monte Carlo pipeline");
  mc->add_flag("--full", full, "Use mc.full_replications instead of mc.replications");

  auto* tables = app.add_subcommand("tables", "Render fits.csv as a regression table");
  tables->add_option("--in", table_in, "fits.csv path (default <out>/fits.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (tables->parsed()) {
      fs::path in = table_in;
      if (in.empty()) {
        const std::string dir = g.out ? *g.out : (g.config_path.empty() ? "out" : load_config(g.config_path).output_dir);
        in = fs::path(dir) / "fits.csv";
      }
      cmd_tables(in);
      return 0;
    }
    const ExperimentConfig c = resolve(g);
    if (simulate->parsed()) cmd_simulate(c, replication, n_slices);
    else if (functionals->parsed()) cmd_functionals(c, replication);
    else if (cointegrate->parsed()) cmd_cointegrate(c, case_name, replication);
    else if (estimate->parsed()) cmd_estimate_sigma1(c, case_name, u, pilot);
    else if (spectrum->parsed()) cmd_spectrum(c, q, probe_reps, replication);
    else if (mc->parsed()) cmd_mc(c, full);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
