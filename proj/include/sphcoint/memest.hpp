#pragma once

// Empirical autocovariance and log-log regression of its decay.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphcoint/diagnostics.hpp"

namespace sphcoint {

/// (1/(T-tau)) sum_{t} X(t) X(t+tau). No mean is subtracted: the series is
/// expected to be centered already.
inline double autocov(std::span<const double> x, std::size_t tau) {
  const std::size_t n = x.size();
  if (tau < 1 || tau >= n) throw std::domain_error("autocov: lag must lie in [1, T-1]");
  double s = 0.0;
  for (std::size_t t = 0; t + tau < n; ++t) s += x[t] * x[t + tau];
  return s / static_cast<double>(n - tau);
}

/// autocov for tau = 1..max_lag (element tau-1).
inline std::vector<double> autocov_upto(std::span<const double> x, std::size_t max_lag) {
  std::vector<double> out(max_lag);
  for (std::size_t tau = 1; tau <= max_lag; ++tau) out[tau - 1] = autocov(x, tau);
  return out;
}

/// min(floor(log10 T), T - 1), computed in integers.
inline std::size_t lag_cutoff(std::size_t length) {
  if (length < 2) throw std::domain_error("lag_cutoff: need T >= 2");
  std::size_t digits = 0;
  for (std::size_t v = length; v >= 10; v /= 10) ++digits;
  return std::min(digits, length - 1);
}

/// Number of lags entering the decay regression.
struct LagRule {
  enum class Kind { paper, power } kind = Kind::paper;
  double exponent = 0.3;

  static LagRule paper() { return {Kind::paper, 0.0}; }
  static LagRule power(double exponent) { return {Kind::power, exponent}; }

  std::size_t lags(std::size_t length) const {
    if (kind == Kind::paper) return lag_cutoff(length);
    const auto q = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(length), exponent)));
    return std::clamp<std::size_t>(q, 1, length - 1);
  }

  std::string describe() const {
    return kind == Kind::paper ? std::string("paper") : "power(" + std::to_string(exponent) + ")";
  }
};

struct DecayFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::size_t lags = 0;           // q_T
  std::size_t lags_excluded = 0;  // exact zeros skipped
};

/// OLS of log|rho(tau)| on (1, log tau) over tau = 1..q_T; rho[tau-1] = rho(tau).
inline DecayFit logreg_decay(std::span<const double> rho, std::size_t q_t) {
  if (q_t > rho.size()) throw std::invalid_argument("logreg_decay: fewer autocovariances than lags");
  std::vector<double> xs, ys;
  std::size_t excluded = 0;
  for (std::size_t tau = 1; tau <= q_t; ++tau) {
    const double r = rho[tau - 1];
    if (r == 0.0 || !std::isfinite(r)) {
      ++excluded;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(tau)));
    ys.push_back(std::log(std::abs(r)));
  }
  if (excluded > 0) warn("logreg_decay: " + std::to_string(excluded) + " zero autocovariance(s) excluded");
  if (xs.size() < 2) throw std::domain_error("logreg_decay: fewer than two usable lags");
  const double nn = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nn;
  my /= nn;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope, q_t, excluded};
}

}  // namespace sphcoint
