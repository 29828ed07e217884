#pragma once

// CSV and JSON artifacts of a Monte Carlo run. All files are UTF-8 with a
// header row, '.' decimals and LF line endings; numbers are printed with
// fixed significant digits so identical summaries give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphcoint/harness/mc.hpp"

#ifndef SPHCOINT_BUILD_TAG
#define SPHCOINT_BUILD_TAG "unknown"
#endif

namespace sphcoint::harness {

inline std::string build_tag() { return SPHCOINT_BUILD_TAG; }

/// Locale-independent %.12g.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Writes `text` to `path` in binary mode (no newline translation).
inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string fits_csv(const McSummary& s) {
  std::ostringstream os;
  os << "target,levels,intercept,slope,q_T,B,T,config_hash,master_seed\n";
  for (const auto& f : s.fits)
    os << f.target.key() << ',' << f.target.levels_text() << ',' << fmt(f.fit.intercept) << ',' << fmt(f.fit.slope)
       << ',' << f.fit.lags << ',' << s.config.replications << ',' << s.config.length << ',' << s.config_hash << ','
       << s.config.master_seed << '\n';
  return os.str();
}

/// rho_normalized = rho_avg / e^{intercept}, the quantity plotted against tau.
inline std::string autocov_csv(const McSummary& s) {
  std::ostringstream os;
  os << "target,tau,rho_avg,rho_normalized\n";
  for (const auto& f : s.fits) {
    const double scale = std::exp(f.fit.intercept);
    for (std::size_t tau = 1; tau <= f.rho_avg.size(); ++tau)
      os << f.target.key() << ',' << tau << ',' << fmt(f.rho_avg[tau - 1]) << ',' << fmt(f.rho_avg[tau - 1] / scale)
         << '\n';
  }
  return os.str();
}

/// Centered series of replication 0, one column per target; t is 1-based.
inline std::string paths_csv(const McSummary& s) {
  std::ostringstream os;
  os << 't';
  for (const auto& f : s.fits) os << ',' << f.target.key();
  os << '\n';
  const std::size_t n = s.paths.empty() ? 0 : s.paths.front().size();
  for (std::size_t t = 0; t < n; ++t) {
    os << t + 1;
    for (const auto& p : s.paths) os << ',' << fmt(p[t]);
    os << '\n';
  }
  return os.str();
}

inline std::string excursion_csv(const McSummary& s) {
  std::ostringstream os;
  os << "t,theta,phi,indicator\n";
  const SphereGrid& g = *s.grid;
  for (const auto& snap : s.excursions)
    for (int i = 0; i < g.n_theta(); ++i)
      for (int j = 0; j < g.n_phi(); ++j)
        os << snap.t << ',' << fmt(g.theta(i)) << ',' << fmt(g.phi(j)) << ','
           << static_cast<int>(snap.above[g.index(i, j)]) << '\n';
  return os.str();
}

inline std::string sigma1_csv(const McSummary& s) {
  std::ostringstream os;
  os << "method,level,estimate,truth,rel_error,sd,median,median_rel_error,B\n";
  for (const auto& r : s.sigma1)
    os << r.method << ',' << fmt(r.level) << ',' << fmt(r.estimate) << ',' << fmt(r.truth) << ',' << fmt(r.rel_error())
       << ',' << fmt(r.sd) << ',' << fmt(r.median) << ',' << fmt(r.median_rel_error) << ',' << s.config.replications
       << '\n';
  return os.str();
}

inline std::string means_csv(const McSummary& s) {
  std::ostringstream os;
  os << "functional,level,mean,sd,expected,rel_error\n";
  for (const auto& m : s.means)
    os << to_string(m.kind) << ',' << fmt(m.level) << ',' << fmt(m.mean) << ',' << fmt(m.sd) << ',' << fmt(m.expected)
       << ',' << fmt(std::abs(m.mean - m.expected) / m.expected) << '\n';
  return os.str();
}

/// Provenance echo. Runtime-only facts (workers, wall time) go to run.json
/// so config.json is as reproducible as the CSVs.
inline std::string config_json(const McSummary& s) {
  nlohmann::ordered_json j;
  j["config"] = s.config.to_json();
  j["config_hash"] = s.config_hash;
  j["master_seed"] = s.config.master_seed;
  j["build"] = build_tag();
  j["q_T"] = s.q_t;
  j["bandwidth_m"] = s.bandwidth;
  j["sigma1_true"] = s.sigma1_truth;
  return j.dump(2) + "\n";
}

inline std::string run_json(const McSummary& s) {
  nlohmann::ordered_json j;
  j["config_hash"] = s.config_hash;
  j["workers"] = s.workers;
  j["elapsed_seconds"] = s.elapsed_seconds;
  return j.dump(2) + "\n";
}

/// Emits fits.csv, autocov.csv, paths.csv, excursion.csv, sigma1.csv,
/// means.csv, config.json and run.json into `dir` (created if missing).
inline std::vector<std::filesystem::path> write_outputs(const McSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"fits.csv", fits_csv(s)},           {"autocov.csv", autocov_csv(s)}, {"paths.csv", paths_csv(s)},
      {"excursion.csv", excursion_csv(s)}, {"sigma1.csv", sigma1_csv(s)},   {"means.csv", means_csv(s)},
      {"config.json", config_json(s)},     {"run.json", run_json(s)}};
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  }
  return written;
}

/// Reads a plain CSV (no quoting) as rows of fields, header included.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

/// Renders fits.csv in the layout of the regression tables: one column per
/// target, rows "Intercept" and "log tau".
inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) throw std::runtime_error("fits table is empty");
  const auto& header = rows.front();
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("fits table lacks column '" + name + "'");
  };
  const std::size_t ct = col("target"), ci = col("intercept"), cs = col("slope");
  std::vector<std::string> names{""}, intercepts{"Intercept"}, slopes{"log tau"};
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max({ct, ci, cs})) throw std::runtime_error("fits table row " + std::to_string(r) + " is short");
    names.push_back(row[ct]);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", std::stod(row[ci]));
    intercepts.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.4f", std::stod(row[cs]));
    slopes.emplace_back(buf);
  }
  std::vector<std::size_t> width(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    width[i] = std::max({names[i].size(), intercepts[i].size(), slopes[i].size()});
  std::ostringstream os;
  for (const auto* line : {&names, &intercepts, &slopes}) {
    for (std::size_t i = 0; i < line->size(); ++i) {
      const std::string& cell = (*line)[i];
      if (i == 0) os << cell << std::string(width[0] - cell.size(), ' ');
      else os << "  " << std::string(width[i] - cell.size(), ' ') << cell;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace sphcoint::harness
