#pragma once

// Independent reference implementations used only by the tests. None of
// them calls into the library code they check.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

/// fGN autocovariance straight from the closed form with H = d + 1/2.
inline double fgn_cov(double d, long tau, double c0) {
  const double h2 = 2.0 * d + 1.0;
  const double t = std::abs(static_cast<double>(tau));
  return 0.5 * c0 * (std::pow(t + 1.0, h2) + std::pow(std::abs(t - 1.0), h2) - 2.0 * std::pow(t, h2));
}

/// Dense Cholesky generator for a stationary Gaussian series.
class CholeskyFgn {
 public:
  CholeskyFgn(std::size_t n, double d, double c0) : n_(n), l_(n * n, 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = fgn_cov(d, static_cast<long>(i) - static_cast<long>(j), c0);
        for (std::size_t k = 0; k < j; ++k) s -= l_[i * n + k] * l_[j * n + k];
        if (i == j) {
          if (s <= 0.0) throw std::runtime_error("CholeskyFgn: covariance not positive definite");
          l_[i * n + i] = std::sqrt(s);
        } else {
          l_[i * n + j] = s / l_[j * n + j];
        }
      }
    }
  }

  template <typename Rng>
  std::vector<double> sample(Rng& rng) const {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> e(n_), x(n_, 0.0);
    for (auto& v : e) v = z(rng);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k <= i; ++k) x[i] += l_[i * n_ + k] * e[k];
    return x;
  }

 private:
  std::size_t n_;
  std::vector<double> l_;
};

/// Probabilists' Hermite polynomial He_6 from its explicit coefficients.
inline double he6_explicit(double x) {
  const double x2 = x * x;
  return ((x2 - 15.0) * x2 + 45.0) * x2 - 15.0;
}

/// Direct O(T) DFT with (2 pi T)^{-1/2} sum_{t=1}^T x_t e^{-i lambda_j t}.
inline std::complex<double> dft_direct(const std::vector<double>& x, std::size_t j) {
  const double n = static_cast<double>(x.size());
  const double lambda = 2.0 * std::numbers::pi * static_cast<double>(j) / n;
  std::complex<double> s{0.0, 0.0};
  for (std::size_t t = 1; t <= x.size(); ++t)
    s += x[t - 1] * std::polar(1.0, -lambda * static_cast<double>(t));
  return s / std::sqrt(2.0 * std::numbers::pi * n);
}

/// Rank by Gaussian elimination with full pivoting.
inline int rank(std::vector<std::vector<double>> a, double tol = 1e-9) {
  const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  int r = 0;
  std::vector<bool> used(rows, false);
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t best = rows;
    double bv = tol;
    for (std::size_t i = 0; i < rows; ++i)
      if (!used[i] && std::abs(a[i][c]) > bv) {
        bv = std::abs(a[i][c]);
        best = i;
      }
    if (best == rows) continue;
    used[best] = true;
    ++r;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == best) continue;
      const double f = a[i][c] / a[best][c];
      for (std::size_t k = c; k < cols; ++k) a[i][k] -= f * a[best][k];
    }
  }
  return r;
}

/// Standard normal density.
inline double phi(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

/// Legendre P_l by explicit formulas for l <= 3, used to spot-check the recurrence.
inline double legendre_small(int l, double x) {
  switch (l) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3.0 * x * x - 1.0);
    case 3: return 0.5 * (5.0 * x * x * x - 3.0 * x);
  }
  throw std::domain_error("legendre_small: l > 3");
}

/// Mean and standard error of a sample.
struct Moments {
  double mean = 0.0, se = 0.0;
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return m;
}

}  // namespace oracle
