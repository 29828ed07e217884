#pragma once

// Fractional Gaussian noise and the harmonic-coefficient panel of a
// sphere-cross-time field whose multipoles are independent fGN processes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphcoint/fft.hpp"
#include "sphcoint/rng.hpp"

namespace sphcoint {

/// Band-limited angular power spectrum together with per-multipole memory.
///
/// Holds C_l(0) and d_l for l = 0..L. Construction validates the
/// unit-variance normalization sum_l (2l+1) C_l(0) / (4 pi) = 1 and that every
/// multipole carrying power has d_l in (0, 1/2).
class MultipoleSpec {
 public:
  MultipoleSpec(std::vector<double> d, std::vector<double> c0) : d_(std::move(d)), c0_(std::move(c0)) {
    validate();
  }

  /// Scales nonnegative per-multipole weights so the field has unit variance.
  static MultipoleSpec normalized(std::vector<double> d, std::vector<double> weights) {
    double total = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l] < 0.0) throw std::invalid_argument("MultipoleSpec: negative weight");
      total += (2.0 * l + 1.0) * weights[l];
    }
    if (total <= 0.0) throw std::invalid_argument("MultipoleSpec: all weights are zero");
    const double scale = 4.0 * std::numbers::pi / total;
    for (double& w : weights) w *= scale;
    return MultipoleSpec(std::move(d), std::move(weights));
  }

  /// Same memory and same C_l(0) = 4 pi / (L+1)^2 at every multipole.
  static MultipoleSpec uniform(int band_limit, double d) {
    if (band_limit < 0) throw std::invalid_argument("MultipoleSpec: negative band limit");
    const auto n = static_cast<std::size_t>(band_limit) + 1;
    return normalized(std::vector<double>(n, d), std::vector<double>(n, 1.0));
  }

  int band_limit() const { return static_cast<int>(d_.size()) - 1; }
  double d(int ell) const { return d_.at(static_cast<std::size_t>(ell)); }
  double c0(int ell) const { return c0_.at(static_cast<std::size_t>(ell)); }
  std::span<const double> memory() const { return d_; }
  std::span<const double> power() const { return c0_; }

  /// Number of real coefficient series, (L+1)^2.
  std::size_t num_series() const { return d_.size() * d_.size(); }

  double variance() const {
    double v = 0.0;
    for (std::size_t l = 0; l < c0_.size(); ++l) v += (2.0 * l + 1.0) * c0_[l];
    return v / (4.0 * std::numbers::pi);
  }

  /// Largest memory among multipoles l >= 1 with nonzero power.
  std::optional<double> d_star() const {
    std::optional<double> best;
    for (std::size_t l = 1; l < d_.size(); ++l)
      if (c0_[l] != 0.0 && (!best || d_[l] > *best)) best = d_[l];
    return best;
  }

  /// max(d_*, d_0); d_0 counts only when l = 0 carries power.
  double d_tilde_star() const {
    std::optional<double> best = d_star();
    if (c0_[0] != 0.0 && (!best || d_[0] > *best)) best = d_[0];
    return *best;  // validate() guarantees some multipole has power
  }

  /// Multipoles with nonzero power attaining d_tilde_star.
  std::vector<int> leading_set() const {
    const double top = d_tilde_star();
    std::vector<int> out;
    for (std::size_t l = 0; l < d_.size(); ++l)
      if (c0_[l] != 0.0 && d_[l] == top) out.push_back(static_cast<int>(l));
    return out;
  }

  /// Largest memory outside the leading set; empty if the leading set is everything.
  std::optional<double> d_star_star() const {
    const double top = d_tilde_star();
    std::optional<double> best;
    for (std::size_t l = 0; l < d_.size(); ++l)
      if (c0_[l] != 0.0 && d_[l] != top && (!best || d_[l] > *best)) best = d_[l];
    return best;
  }

 private:
  void validate() const {
    if (d_.empty() || d_.size() != c0_.size())
      throw std::invalid_argument("MultipoleSpec: d and c0 must be nonempty and of equal length");
    bool any_power = false;
    for (std::size_t l = 0; l < d_.size(); ++l) {
      if (!(c0_[l] >= 0.0) || !std::isfinite(c0_[l]))
        throw std::invalid_argument("MultipoleSpec: C_l(0) must be finite and nonnegative (l=" + std::to_string(l) + ")");
      if (!(d_[l] >= 0.0 && d_[l] < 0.5))
        throw std::invalid_argument("MultipoleSpec: d_l outside [0, 1/2) (l=" + std::to_string(l) + ")");
      if (c0_[l] > 0.0) {
        any_power = true;
        if (d_[l] <= 0.0) throw std::invalid_argument("MultipoleSpec: d_l must be > 0 where C_l(0) > 0");
      }
    }
    if (!any_power) throw std::invalid_argument("MultipoleSpec: no multipole carries power");
    if (std::abs(variance() - 1.0) > 1e-12)
      throw std::invalid_argument("MultipoleSpec: field variance is not 1 (use MultipoleSpec::normalized)");
  }

  std::vector<double> d_;
  std::vector<double> c0_;
};

/// Autocovariance of fractional Gaussian noise with Hurst index H = d + 1/2.
inline double fgn_autocov(double d, long long tau, double c0) {
  if (!(d >= 0.0 && d < 0.5)) throw std::domain_error("fgn_autocov: d must lie in [0, 1/2)");
  if (tau < 0) throw std::domain_error("fgn_autocov: negative lag");
  if (tau == 0) return c0;
  const double two_h = 2.0 * d + 1.0;
  if (tau == 1) return 0.5 * c0 * (std::pow(2.0, two_h) - 2.0);
  // tau^{2H} [ (1+1/tau)^{2H} + (1-1/tau)^{2H} - 2 ], written to avoid cancellation.
  const double x = 1.0 / static_cast<double>(tau);
  const double bracket = std::expm1(two_h * std::log1p(x)) + std::expm1(two_h * std::log1p(-x));
  return 0.5 * c0 * std::pow(static_cast<double>(tau), two_h) * bracket;
}

/// Exact fGN sampler by circulant embedding.
///
/// The covariance is embedded in a circulant of size 2^k >= 2(T-1); its
/// eigenvalues are computed once, so repeated draws cost one FFT each.
class FgnGenerator {
 public:
  FgnGenerator(std::size_t length, double d, double c0) : length_(length) {
    if (length < 2) throw std::domain_error("FgnGenerator: length must be >= 2");
    if (c0 < 0.0) throw std::domain_error("FgnGenerator: negative variance");
    const std::size_t m = std::bit_ceil(2 * (length - 1));
    const std::size_t half = m / 2;
    std::vector<double> row(m);
    for (std::size_t k = 0; k <= half; ++k) {
      row[k] = fgn_autocov(d, static_cast<long long>(k), c0);
      if (k > 0 && k < half) row[m - k] = row[k];
    }
    const auto eig = fft::transform_real(row);
    double top = 0.0;
    for (const auto& e : eig) top = std::max(top, e.real());
    scale_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      double lambda = eig[k].real();
      if (lambda < 0.0) {
        if (lambda < -1e-10 * std::max(top, 1.0))
          throw std::runtime_error("FgnGenerator: circulant embedding has a negative eigenvalue");
        lambda = 0.0;
      }
      scale_[k] = std::sqrt(lambda / static_cast<double>(m));
    }
  }

  std::size_t length() const { return length_; }
  std::size_t embedding_size() const { return scale_.size(); }

  std::vector<double> sample(NormalStream& stream) const {
    const std::size_t m = scale_.size();
    std::vector<fft::cplx> w(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double re = stream();
      const double im = stream();
      w[k] = {scale_[k] * re, scale_[k] * im};
    }
    const auto x = fft::transform(w);
    std::vector<double> out(length_);
    for (std::size_t t = 0; t < length_; ++t) out[t] = x[t].real();
    return out;
  }

 private:
  std::size_t length_;
  std::vector<double> scale_;
};

inline std::vector<double> simulate_fgn(std::size_t length, double d, double c0, NormalStream& stream) {
  return FgnGenerator(length, d, c0).sample(stream);
}

/// Index of the real coefficient a_{l m} in l-major order.
constexpr std::size_t lm_index(int ell, int m) noexcept {
  return static_cast<std::size_t>(ell * ell + ell + m);
}

/// Real harmonic coefficients a_{lm}(t), stored time-major so that one time
/// slice is contiguous.
class CoefficientPanel {
 public:
  CoefficientPanel(MultipoleSpec spec, std::size_t length, std::uint64_t master_seed = 0,
                   std::uint64_t replication = 0)
      : spec_(std::move(spec)),
        length_(length),
        master_seed_(master_seed),
        replication_(replication),
        values_(length * spec_.num_series(), 0.0) {}

  const MultipoleSpec& spec() const { return spec_; }
  int band_limit() const { return spec_.band_limit(); }
  std::size_t length() const { return length_; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t replication() const { return replication_; }

  double& at(int ell, int m, std::size_t t) { return values_[t * spec_.num_series() + lm_index(ell, m)]; }
  double at(int ell, int m, std::size_t t) const { return values_[t * spec_.num_series() + lm_index(ell, m)]; }

  /// All (L+1)^2 coefficients at time t (0-based).
  std::span<const double> slice(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * spec_.num_series(), spec_.num_series());
  }
  std::span<double> slice(std::size_t t) {
    return std::span<double>(values_).subspan(t * spec_.num_series(), spec_.num_series());
  }

  std::vector<double> series(int ell, int m) const {
    std::vector<double> out(length_);
    for (std::size_t t = 0; t < length_; ++t) out[t] = at(ell, m, t);
    return out;
  }

 private:
  MultipoleSpec spec_;
  std::size_t length_;
  std::uint64_t master_seed_;
  std::uint64_t replication_;
  std::vector<double> values_;
};

/// Simulates every a_{lm}(.) as an independent fGN series from its own stream.
inline CoefficientPanel simulate_panel(const MultipoleSpec& spec, std::size_t length, std::uint64_t master_seed,
                                       std::uint64_t replication = 0) {
  CoefficientPanel panel(spec, length, master_seed, replication);
  for (int ell = 0; ell <= spec.band_limit(); ++ell) {
    if (spec.c0(ell) == 0.0) continue;
    const FgnGenerator gen(length, spec.d(ell), spec.c0(ell));
    for (int m = -ell; m <= ell; ++m) {
      NormalStream stream(stream_seed(master_seed, replication, ell, m));
      const auto x = gen.sample(stream);
      for (std::size_t t = 0; t < length; ++t) panel.at(ell, m, t) = x[t];
    }
  }
  return panel;
}

}  // namespace sphcoint
