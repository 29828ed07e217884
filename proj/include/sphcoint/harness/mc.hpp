#pragma once

// Monte Carlo driver: replicate the field, extract functionals, average the
// empirical autocovariances across replications and fit their decay.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sphcoint/coint.hpp"
#include "sphcoint/fgn.hpp"
#include "sphcoint/functionals.hpp"
#include "sphcoint/harness/config.hpp"
#include "sphcoint/memest.hpp"
#include "sphcoint/parallel.hpp"
#include "sphcoint/spectral.hpp"
#include "sphcoint/sphere.hpp"

namespace sphcoint::harness {

/// One series whose averaged autocovariance is fitted.
struct Target {
  FunctionalKind kind = FunctionalKind::field;
  std::vector<double> levels;  // empty for the field, two for a residual
  int order = 0;               // chaos order

  std::string levels_text() const {
    std::string out;
    for (std::size_t i = 0; i < levels.size(); ++i) out += (i ? ";" : "") + format_level(levels[i]);
    return out;
  }

  /// Unique column name, e.g. "area[-0.1]" or "coint_residual[-0.1;0.1]".
  std::string key() const {
    std::string name = kind == FunctionalKind::chaos ? "chaos" + std::to_string(order) : to_string(kind);
    return levels.empty() ? name : name + "[" + levels_text() + "]";
  }

  static std::string format_level(double u) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", u);
    return buf;
  }
};

struct TargetFit {
  Target target;
  DecayFit fit;
  std::vector<double> rho_avg;  // rho_avg[tau-1]
};

struct FunctionalMean {
  FunctionalKind kind = FunctionalKind::area;
  double level = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // across replications of the time average
  double expected = 0.0;
};

struct Sigma1Result {
  std::string method;  // naive | nbls_a | nbls_b
  double level = 0.0;
  double estimate = 0.0;  // mean across replications
  double sd = 0.0;
  double median = 0.0;
  double median_rel_error = 0.0;
  double truth = 0.0;

  double rel_error() const { return std::abs(estimate - truth) / truth; }
};

struct ExcursionSnapshot {
  std::size_t t = 0;  // 1-based
  double level = 0.0;
  std::vector<std::uint8_t> above;
};

struct McSummary {
  ExperimentConfig config;
  std::string config_hash;
  std::size_t q_t = 0;
  std::size_t bandwidth = 0;
  double sigma1_truth = 0.0;
  std::vector<TargetFit> fits;
  std::vector<FunctionalMean> means;
  std::vector<Sigma1Result> sigma1;
  std::shared_ptr<const SphereGrid> grid;
  std::vector<std::vector<double>> paths;  // replication 0, one series per fit
  std::vector<ExcursionSnapshot> excursions;
  double elapsed_seconds = 0.0;
  unsigned workers = 1;
};

/// Targets in output order: field at the North Pole, areas, area residuals
/// (rows of Gamma_1), lengths, chaos projections.
inline std::vector<Target> target_layout(const ExperimentConfig& c) {
  std::vector<Target> out;
  out.push_back({FunctionalKind::field, {}, 0});
  if (c.area) {
    for (double u : c.levels) out.push_back({FunctionalKind::area, {u}, 0});
    for (std::size_t i = 1; i < c.levels.size(); ++i)
      out.push_back({FunctionalKind::coint_residual, {c.levels[0], c.levels[i]}, 0});
  }
  if (c.length_functional)
    for (double u : c.levels) out.push_back({FunctionalKind::length, {u}, 0});
  for (int q : c.chaos_orders) out.push_back({FunctionalKind::chaos, {}, q});
  return out;
}

/// Unique l >= 1 attaining d_*; throws when it is absent or not unique.
inline int leading_multipole(const MultipoleSpec& spec) {
  const auto ds = spec.d_star();
  if (!ds) throw std::domain_error("leading_multipole: no multipole l >= 1 carries power");
  int found = -1;
  for (int ell = 1; ell <= spec.band_limit(); ++ell) {
    if (spec.c0(ell) == 0.0 || spec.d(ell) != *ds) continue;
    if (found >= 0) throw std::domain_error("leading_multipole: l* is not unique");
    found = ell;
  }
  return found;
}

/// Case-b level: sigma1.level when set, else u* from the pilot sigma1 when
/// given, else u* from the true spec.
inline double case_b_level(const ExperimentConfig& c, const MultipoleSpec& spec) {
  if (c.sigma1_level) return *c.sigma1_level;
  const double sigma1 = c.sigma1_pilot.value_or(sigma1_true(spec));
  const int ell = c.ell_star.value_or(leading_multipole(spec));
  return u_star(sigma1, ell);
}

namespace detail {

struct Replicate {
  std::vector<std::vector<double>> rho;    // per target
  std::vector<double> area_mean;           // per level
  std::vector<double> length_mean;         // per level
  std::vector<double> sigma1;              // per sigma1 method
  std::vector<std::vector<double>> paths;  // replication 0 only
  std::vector<ExcursionSnapshot> excursions;
};

struct Sigma1Plan {
  std::string method;
  double level;
  std::size_t index;  // into the level list used for the length series
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Runs the full pipeline. Every replication draws from streams seeded by
/// (master_seed, replication), results land in per-replication slots and are
/// reduced in replication order, so the summary does not depend on the
/// worker count.
inline McSummary run_mc(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const MultipoleSpec spec = config.spec();
  const auto layout = target_layout(config);
  const std::size_t T = config.length, B = config.replications;
  const std::size_t q_t = config.lag_rule.lags(T);
  const std::size_t max_lag = std::min(std::max(q_t, config.report_lags), T - 1);
  const double sigma1 = sigma1_true(spec);
  const std::size_t m = config.bandwidth();

  // Levels at which boundary lengths are traced, and the sigma1 estimators.
  std::vector<double> length_levels;
  std::vector<detail::Sigma1Plan> plans;
  if (config.length_functional || config.sigma1_case == Sigma1Case::a) length_levels = config.levels;
  if (config.sigma1_case != Sigma1Case::none) {
    for (std::size_t k = 0; k < length_levels.size(); ++k) plans.push_back({"naive", length_levels[k], k});
    if (config.sigma1_case == Sigma1Case::a) {
      for (std::size_t k = 0; k < length_levels.size(); ++k)
        if (length_levels[k] != 0.0) plans.push_back({"nbls_a", length_levels[k], k});
    } else {
      length_levels.push_back(case_b_level(config, spec));
      const std::size_t k = length_levels.size() - 1;
      plans.push_back({"naive", length_levels[k], k});
      plans.push_back({"nbls_b", length_levels[k], k});
    }
  }
  if (config.sigma1_case != Sigma1Case::none && m >= T / 2)
    throw ConfigError({"estimate.bandwidth_exponent gives m = " + std::to_string(m) + " >= T/2"});

  // Area levels include the case-b level when needed by NBLS.
  std::vector<double> area_levels = config.levels;
  const bool need_area_at_ustar = config.sigma1_case == Sigma1Case::b;
  if (need_area_at_ustar) area_levels.push_back(length_levels.back());

  const Matrix g1 = config.area && config.levels.size() >= 2 ? gamma1(config.levels) : Matrix();
  auto grid = std::make_shared<const SphereGrid>(config.n_theta);
  const Synthesizer synth(grid, spec.band_limit());

  if (q_t < 2) warn("run_mc: lag rule gives q_T = " + std::to_string(q_t) + " at T = " + std::to_string(T) +
                    "; decay fits are undefined and reported as nan");

  std::vector<detail::Replicate> reps(B);
  parallel_for(B, config.workers, [&](std::size_t b) {
    const auto panel = simulate_panel(spec, T, config.master_seed, b);
    const std::size_t na = area_levels.size(), nl = length_levels.size();
    std::vector<double> field(T);
    std::vector<std::vector<double>> area(na, std::vector<double>(T)), len(nl, std::vector<double>(T));
    std::vector<std::vector<double>> chaos(config.chaos_orders.size(), std::vector<double>(T));
    detail::Replicate& r = reps[b];

    for (std::size_t t = 0; t < T; ++t) {
      const FieldSlice slice = synth(panel.slice(t), t);
      field[t] = slice.north_pole;
      for (std::size_t k = 0; k < na; ++k) area[k][t] = excursion_area(slice, area_levels[k]);
      for (std::size_t k = 0; k < nl; ++k) len[k][t] = boundary_length(slice, length_levels[k]);
      for (std::size_t k = 0; k < config.chaos_orders.size(); ++k)
        chaos[k][t] = chaos_projection(slice, config.chaos_orders[k]);
      if (b == 0) {
        for (std::size_t snap : config.excursion_times) {
          if (snap != t + 1) continue;
          ExcursionSnapshot s{snap, config.snapshot_level(), std::vector<std::uint8_t>(slice.values.size())};
          for (std::size_t i = 0; i < slice.values.size(); ++i) s.above[i] = slice.values[i] > s.level ? 1 : 0;
          r.excursions.push_back(std::move(s));
        }
      }
    }

    for (std::size_t k = 0; k < config.levels.size() && config.area; ++k) r.area_mean.push_back(detail::mean_of(area[k]));
    for (std::size_t k = 0; k < config.levels.size() && config.length_functional; ++k)
      r.length_mean.push_back(detail::mean_of(len[k]));

    // Centre with the analytic means; raw lengths stay for the naive estimator.
    for (std::size_t k = 0; k < na; ++k)
      for (double& v : area[k]) v -= expected_area(area_levels[k]);
    std::vector<std::vector<double>> len_centered = len;
    for (std::size_t k = 0; k < nl; ++k)
      for (double& v : len_centered[k]) v -= expected_length(length_levels[k], sigma1);

    for (const auto& p : plans) {
      if (p.method == "naive") {
        r.sigma1.push_back(naive_sigma1(len[p.index], p.level));
      } else if (p.method == "nbls_a") {
        const auto it = std::find(area_levels.begin(), area_levels.end(), p.level);
        const auto& a = area[static_cast<std::size_t>(it - area_levels.begin())];
        r.sigma1.push_back(estimate_sigma1_case_a(a, len_centered[p.index], p.level, m).sigma1_hat);
      } else {
        r.sigma1.push_back(estimate_sigma1_case_b(area.back(), len_centered[p.index], p.level, m).sigma1_hat);
      }
    }

    // Series per target, in layout order.
    std::vector<std::vector<double>> series;
    series.reserve(layout.size());
    std::size_t area_k = 0, resid_k = 0, length_k = 0, chaos_k = 0;
    for (const auto& target : layout) {
      switch (target.kind) {
        case FunctionalKind::field: series.push_back(field); break;
        case FunctionalKind::area: series.push_back(area[area_k++]); break;
        case FunctionalKind::coint_residual: {
          std::vector<double> res(T);
          const auto i = static_cast<Eigen::Index>(resid_k++);
          for (std::size_t t = 0; t < T; ++t)
            for (Eigen::Index c = 0; c < g1.cols(); ++c) res[t] += g1(i, c) * area[static_cast<std::size_t>(c)][t];
          series.push_back(std::move(res));
          break;
        }
        case FunctionalKind::length: series.push_back(len_centered[length_k++]); break;
        case FunctionalKind::chaos: series.push_back(chaos[chaos_k++]); break;
      }
    }
    for (const auto& s : series) r.rho.push_back(autocov_upto(s, max_lag));
    if (b == 0) r.paths = std::move(series);
  });

  McSummary out;
  out.config = config;
  out.config_hash = config.hash();
  out.q_t = q_t;
  out.bandwidth = m;
  out.sigma1_truth = sigma1;
  out.grid = grid;
  out.workers = config.workers;

  for (std::size_t k = 0; k < layout.size(); ++k) {
    TargetFit f;
    f.target = layout[k];
    f.rho_avg.assign(max_lag, 0.0);
    for (const auto& r : reps)
      for (std::size_t tau = 0; tau < max_lag; ++tau) f.rho_avg[tau] += r.rho[k][tau];
    for (double& v : f.rho_avg) v /= static_cast<double>(B);
    if (q_t >= 2) {
      f.fit = logreg_decay(f.rho_avg, q_t);
    } else {
      f.fit = {std::nan(""), std::nan(""), q_t, 0};
    }
    out.fits.push_back(std::move(f));
  }

  auto summarize = [&](FunctionalKind kind, std::size_t k, double level, double expected,
                       std::vector<double> detail::Replicate::*member) {
    FunctionalMean fm{kind, level, 0.0, 0.0, expected};
    for (const auto& r : reps) fm.mean += (r.*member)[k];
    fm.mean /= static_cast<double>(B);
    for (const auto& r : reps) fm.sd += ((r.*member)[k] - fm.mean) * ((r.*member)[k] - fm.mean);
    fm.sd = B > 1 ? std::sqrt(fm.sd / static_cast<double>(B - 1)) : 0.0;
    out.means.push_back(fm);
  };
  if (config.area)
    for (std::size_t k = 0; k < config.levels.size(); ++k)
      summarize(FunctionalKind::area, k, config.levels[k], expected_area(config.levels[k]), &detail::Replicate::area_mean);
  if (config.length_functional)
    for (std::size_t k = 0; k < config.levels.size(); ++k)
      summarize(FunctionalKind::length, k, config.levels[k], expected_length(config.levels[k], sigma1),
                &detail::Replicate::length_mean);

  for (std::size_t p = 0; p < plans.size(); ++p) {
    Sigma1Result s;
    s.method = plans[p].method;
    s.level = plans[p].level;
    s.truth = sigma1;
    std::vector<double> est, err;
    for (const auto& r : reps) {
      est.push_back(r.sigma1[p]);
      err.push_back(std::abs(r.sigma1[p] - sigma1) / sigma1);
    }
    s.estimate = detail::mean_of(est);
    for (double e : est) s.sd += (e - s.estimate) * (e - s.estimate);
    s.sd = B > 1 ? std::sqrt(s.sd / static_cast<double>(B - 1)) : 0.0;
    s.median = sphcoint::detail::quantile(est, 0.5);
    s.median_rel_error = sphcoint::detail::quantile(err, 0.5);
    out.sigma1.push_back(std::move(s));
  }

  out.paths = std::move(reps.front().paths);
  out.excursions = std::move(reps.front().excursions);
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace sphcoint::harness
