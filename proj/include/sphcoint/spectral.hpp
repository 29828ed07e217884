#pragma once

// Frequency-domain machinery: DFT ordinates at Fourier frequencies
// lambda_j = 2 pi j / T, the averaged periodogram, narrow-band least squares,
// sigma1 estimators built on NBLS, and power-law models of the low-frequency
// spectrum of Hermite-transformed fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphcoint/fft.hpp"
#include "sphcoint/fgn.hpp"
#include "sphcoint/functionals.hpp"
#include "sphcoint/parallel.hpp"
#include "sphcoint/sphere.hpp"

namespace sphcoint {

inline double fourier_frequency(std::size_t j, std::size_t length) {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(length);
}

/// w(lambda_j) = (2 pi T)^{-1/2} sum_{t=1}^T X_t exp(-i lambda_j t), by direct summation.
inline std::complex<double> dft(std::span<const double> x, std::size_t j) {
  const std::size_t n = x.size();
  if (j < 1 || j >= n) throw std::domain_error("dft: frequency index must lie in [1, T-1]");
  const double lambda = fourier_frequency(j, n);
  std::complex<double> s = 0.0;
  for (std::size_t t = 0; t < n; ++t) s += x[t] * std::polar(1.0, -lambda * static_cast<double>(t + 1));
  return s / std::sqrt(2.0 * std::numbers::pi * static_cast<double>(n));
}

/// w(lambda_j) for j = 0..T-1 via one FFT.
inline std::vector<std::complex<double>> dft_all(std::span<const double> x) {
  const std::size_t n = x.size();
  auto out = fft::transform_real(x);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) out[j] *= std::polar(norm, -fourier_frequency(j, n));
  return out;
}

/// I(lambda_j) = |w(lambda_j)|^2, j = 0..T-1.
inline std::vector<double> periodogram(std::span<const double> x) {
  const auto w = dft_all(x);
  std::vector<double> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = std::norm(w[j]);
  return out;
}

namespace detail {
inline void check_bandwidth(std::size_t m, std::size_t length, const char* who) {
  if (m < 1 || m > length / 2) throw std::domain_error(std::string(who) + ": bandwidth must lie in [1, floor(T/2)]");
}
}  // namespace detail

/// F_hat(lambda_m) = (2 pi / T) sum_{j=1}^m I(lambda_j).
inline double averaged_periodogram(std::span<const double> x, std::size_t m) {
  detail::check_bandwidth(m, x.size(), "averaged_periodogram");
  const auto w = dft_all(x);
  double s = 0.0;
  for (std::size_t j = 1; j <= m; ++j) s += std::norm(w[j]);
  return 2.0 * std::numbers::pi / static_cast<double>(x.size()) * s;
}

/// Default bandwidth floor(T^exponent), clamped to [1, floor(T/2)].
inline std::size_t default_bandwidth(std::size_t length, double exponent = 0.5) {
  auto m = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(length), exponent) + 1e-9));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(1, length / 2));
}

/// Narrow-band least squares slope of y on x over the first m Fourier
/// frequencies: Re sum w_x conj(w_y) / sum |w_x|^2. The zero frequency is
/// excluded, so constant shifts of either series do not matter.
inline double nbls(std::span<const double> x, std::span<const double> y, std::size_t m) {
  if (x.size() != y.size()) throw std::invalid_argument("nbls: series lengths differ");
  detail::check_bandwidth(m, x.size(), "nbls");
  const auto wx = dft_all(x);
  const auto wy = dft_all(y);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    num += (wx[j] * std::conj(wy[j])).real();
    den += std::norm(wx[j]);
  }
  if (!(den > 0.0)) throw std::domain_error("nbls: regressor has no power in the band");
  return num / den;
}

enum class EstimatorCase { a, b };

struct SpectralEstimate {
  std::size_t m = 0;
  double lambda_m = 0.0;
  double f_hat = 0.0;  // averaged periodogram of the regressor at lambda_m
  double slope = 0.0;  // NBLS beta_hat (case a) or alpha_hat (case b)
  double sigma1_hat = 0.0;
  EstimatorCase case_label = EstimatorCase::a;
};

/// Ratio of first-chaos loadings length/area at level u:
/// sigma1 sqrt(2) pi u phi(u) / (sqrt(4 pi) phi(u)) = sigma1 u sqrt(pi/2).
inline double beta_coefficient(double u, double sigma1) { return sigma1 * u * std::sqrt(std::numbers::pi / 2.0); }

/// Level at which the leading multipole's second-chaos bracket of the length equals one.
inline double u_star(double sigma1, int ell_star) {
  const double lambda = static_cast<double>(ell_star) * (ell_star + 1);
  const double radicand = 2.0 - (lambda / 2.0) / (sigma1 * sigma1);
  if (!(radicand > 0.0)) throw std::domain_error("u_star: 2 - lambda/(2 sigma1^2) must be positive");
  return std::sqrt(radicand);
}

/// Ratio of leading second-chaos loadings length/area at u*:
/// (sigma1/2) sqrt(pi/2) phi / (u* phi / 2) = sigma1 sqrt(pi/2) / u*.
inline double alpha_coefficient(double u_star_value, double sigma1) {
  return sigma1 * std::sqrt(std::numbers::pi / 2.0) / u_star_value;
}

namespace detail {
inline SpectralEstimate nbls_estimate(std::span<const double> area, std::span<const double> length, std::size_t m,
                                      EstimatorCase c) {
  SpectralEstimate e;
  e.m = m;
  e.lambda_m = fourier_frequency(m, area.size());
  e.f_hat = averaged_periodogram(area, m);
  e.slope = nbls(area, length, m);
  e.case_label = c;
  return e;
}
}  // namespace detail

/// Case a (d_0 > 2 d_* - 1/2): regress the centered length on the centered
/// area at level u; sigma1_hat = beta_hat / (u sqrt(pi/2)).
inline SpectralEstimate estimate_sigma1_case_a(std::span<const double> area, std::span<const double> length, double u,
                                               std::size_t m) {
  if (u == 0.0) throw std::domain_error("estimate_sigma1_case_a: level must be nonzero");
  auto e = detail::nbls_estimate(area, length, m, EstimatorCase::a);
  e.sigma1_hat = e.slope / beta_coefficient(u, 1.0);
  return e;
}

/// Case b (d_0 < 2 d_* - 1/2, unique leading l*): at u = u*, sigma1_hat = u* sqrt(2/pi) alpha_hat.
/// u* itself depends on sigma1 and l*, so it must come from the true spec or a pilot estimate.
inline SpectralEstimate estimate_sigma1_case_b(std::span<const double> area, std::span<const double> length,
                                               double u_star_value, std::size_t m) {
  if (!(u_star_value > 0.0)) throw std::domain_error("estimate_sigma1_case_b: u* must be positive");
  auto e = detail::nbls_estimate(area, length, m, EstimatorCase::b);
  e.sigma1_hat = u_star_value * std::sqrt(2.0 / std::numbers::pi) * e.slope;
  return e;
}

/// Naive time-average estimator: mean length / (2 pi exp(-u^2/2)).
inline double naive_sigma1(std::span<const double> length, double u) {
  if (length.empty()) throw std::invalid_argument("naive_sigma1: empty series");
  double s = 0.0;
  for (double v : length) s += v;
  return s / static_cast<double>(length.size()) / (2.0 * std::numbers::pi * std::exp(-0.5 * u * u));
}

/// Memory of the q-th chaos: q d - (q-1)/2.
inline double d_q(int q, double d_tilde_star) {
  if (q < 1) throw std::domain_error("d_q: order must be >= 1");
  return q * d_tilde_star - (q - 1) / 2.0;
}

inline bool is_long_memory(double d) { return d > 0.0 && d < 0.5; }

/// Gamma function by the Lanczos approximation (g = 7, 9 terms), with
/// reflection below 1/2.
inline double lanczos_gamma(double x) {
  static constexpr std::array<double, 9> c{0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                           771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                           -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

/// q! int_{S2 x S2} (sum_{l in I*} (2l+1) C_l(0) P_l(<x,y>))^q dx dy
///   = q! 8 pi^2 int_{-1}^{1} (...)^q dc, by Gauss-Legendre exact for the polynomial.
inline double l_q_constant(const MultipoleSpec& spec, int q) {
  if (q < 1) throw std::domain_error("l_q_constant: order must be >= 1");
  const auto leading = spec.leading_set();
  const int L = spec.band_limit();
  const auto gl = gauss_legendre(q * L + 1);
  double integral = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    double s = 0.0;
    for (int ell : leading) s += (2.0 * ell + 1.0) * spec.c0(ell) * legendre_p(ell, gl.nodes[k]);
    integral += gl.weights[k] * std::pow(s, q);
  }
  double fact = 1.0;
  for (int k = 2; k <= q; ++k) fact *= k;
  return fact * 8.0 * std::numbers::pi * std::numbers::pi * integral;
}

/// rho_q(tau) ~ L_q tau^{2 d_q - 1} for the q-th Hermite projection.
struct LongMemoryModel {
  int q = 1;
  double d_tilde_star = 0.0;
  double memory = 0.0;  // d_q
  double constant = 0.0;  // L_q

  bool valid() const { return is_long_memory(memory); }

  /// Constant as displayed (assumes C_l(tau) ~ C_l(0) tau^{2d-1}).
  static LongMemoryModel from_spec(const MultipoleSpec& spec, int q) {
    const double dt = spec.d_tilde_star();
    return {q, dt, d_q(q, dt), l_q_constant(spec, q)};
  }

  /// Constant for fGN multipoles: the field covariance is
  /// sum (2l+1) C_l(tau) P_l / (4 pi) and C_l(tau) ~ C_l(0) d(2d+1) tau^{2d-1},
  /// so L_q picks up (d(2d+1) / (4 pi))^q.
  static LongMemoryModel fgn_field(const MultipoleSpec& spec, int q) {
    auto model = from_spec(spec, q);
    const double dt = model.d_tilde_star;
    model.constant *= std::pow(dt * (2.0 * dt + 1.0) / (4.0 * std::numbers::pi), q);
    return model;
  }
};

namespace detail {
inline double tauberian_scale(const LongMemoryModel& model) {
  const double d = model.memory;
  if (!is_long_memory(d)) throw std::domain_error("spectral model: d_q must lie in (0, 1/2)");
  return lanczos_gamma(2.0 * d) * model.constant * std::sin(std::numbers::pi * (1.0 - 2.0 * d) / 2.0) /
         std::numbers::pi;
}
}  // namespace detail

/// f_q(lambda) = pi^{-1} Gamma(2 d_q) L_q sin(pi (1 - 2 d_q) / 2) lambda^{-2 d_q}.
inline double f_q_model(double lambda, const LongMemoryModel& model) {
  if (!(lambda > 0.0 && lambda <= std::numbers::pi)) throw std::domain_error("f_q_model: lambda must lie in (0, pi]");
  return detail::tauberian_scale(model) * std::pow(lambda, -2.0 * model.memory);
}

/// Integral of f_q on (0, lambda].
inline double F_q_model(double lambda, const LongMemoryModel& model) {
  if (!(lambda > 0.0 && lambda <= std::numbers::pi)) throw std::domain_error("F_q_model: lambda must lie in (0, pi]");
  const double d = model.memory;
  return detail::tauberian_scale(model) * std::pow(lambda, 1.0 - 2.0 * d) / (1.0 - 2.0 * d);
}

struct ProbeSummary {
  int q = 1;
  std::size_t length = 0, bandwidth = 0, replications = 0;
  double model_F = 0.0;
  double median = 0.0, lower_quartile = 0.0, upper_quartile = 0.0;
  std::vector<double> ratios;
};

namespace detail {
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace detail

/// Chaos projection series int He_q(Z(x,t)) dx on a grid fine enough for the
/// quadrature to be exact at degree q L.
inline std::vector<double> chaos_series(const CoefficientPanel& panel, int q) {
  const int n_theta = std::max(2, (q * panel.band_limit() + 2) / 2 + 1);
  const Synthesizer synth(std::make_shared<const SphereGrid>(n_theta), panel.band_limit());
  std::vector<double> out(panel.length());
  for (std::size_t t = 0; t < panel.length(); ++t) out[t] = chaos_projection(synth(panel.slice(t), t), q);
  return out;
}

/// Monte Carlo distribution of F_hat_q(lambda_m) / F_q(lambda_m). Reports,
/// never judges: outside q = 1 there is no theorem behind the ratio.
inline ProbeSummary conjecture_probe(const MultipoleSpec& spec, int q, std::size_t length, std::size_t m,
                                     std::size_t replications, std::uint64_t seed, unsigned workers = 1) {
  const auto model = LongMemoryModel::fgn_field(spec, q);
  if (!model.valid()) throw std::domain_error("conjecture_probe: d_q outside (0, 1/2) for this order");
  detail::check_bandwidth(m, length, "conjecture_probe");
  if (replications < 1) throw std::domain_error("conjecture_probe: need at least one replication");
  ProbeSummary s;
  s.q = q;
  s.length = length;
  s.bandwidth = m;
  s.replications = replications;
  s.model_F = F_q_model(fourier_frequency(m, length), model);
  s.ratios.assign(replications, 0.0);
  parallel_for(replications, workers, [&](std::size_t b) {
    const auto panel = simulate_panel(spec, length, seed, b);
    s.ratios[b] = averaged_periodogram(chaos_series(panel, q), m) / s.model_F;
  });
  s.median = detail::quantile(s.ratios, 0.5);
  s.lower_quartile = detail::quantile(s.ratios, 0.25);
  s.upper_quartile = detail::quantile(s.ratios, 0.75);
  return s;
}

}  // namespace sphcoint
