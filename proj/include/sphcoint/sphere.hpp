#pragma once

// Iso-latitude Gauss-Legendre grid on the sphere, real spherical harmonics,
// and synthesis of field slices from harmonic coefficients.

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sphcoint/fgn.hpp"

namespace sphcoint {

/// Gauss-Legendre nodes and weights on [-1, 1], nodes in decreasing order.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre: need at least one node");
  GaussLegendre gl{std::vector<double>(n), std::vector<double>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[i] = x;
    gl.weights[i] = w;
    gl.nodes[n - 1 - i] = -x;
    gl.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) gl.nodes[n / 2] = 0.0;
  return gl;
}

/// Unit vector on the sphere.
struct Vec3 {
  double x, y, z;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 unit_vector(double theta, double phi) {
  const double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

/// Great-circle distance between unit vectors.
inline double arc_length(const Vec3& a, const Vec3& b) {
  const Vec3 c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
  return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

/// n_theta Gauss-Legendre rings in cos(theta), 2 n_theta equispaced
/// longitudes per ring starting at phi = 0. Nodes are numbered ring-major.
/// Integrates band-limited products exactly up to total degree 2 n_theta - 1.
class SphereGrid {
 public:
  explicit SphereGrid(int n_theta) : n_theta_(n_theta), n_phi_(2 * n_theta) {
    if (n_theta < 2) throw std::domain_error("SphereGrid: n_theta must be >= 2");
    const auto gl = gauss_legendre(n_theta);
    cos_theta_ = gl.nodes;
    theta_.resize(n_theta);
    sin_theta_.resize(n_theta);
    ring_weight_.resize(n_theta);
    const double dphi = 2.0 * std::numbers::pi / n_phi_;
    for (int i = 0; i < n_theta; ++i) {
      theta_[i] = std::acos(cos_theta_[i]);
      sin_theta_[i] = std::sqrt((1.0 - cos_theta_[i]) * (1.0 + cos_theta_[i]));
      ring_weight_[i] = dphi * gl.weights[i];
    }
    phi_.resize(n_phi_);
    for (int j = 0; j < n_phi_; ++j) phi_[j] = dphi * j;
  }

  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  std::size_t index(int ring, int lon) const { return static_cast<std::size_t>(ring) * n_phi_ + lon; }

  double theta(int ring) const { return theta_[ring]; }
  double cos_theta(int ring) const { return cos_theta_[ring]; }
  double sin_theta(int ring) const { return sin_theta_[ring]; }
  double phi(int lon) const { return phi_[lon]; }
  double ring_weight(int ring) const { return ring_weight_[ring]; }
  double weight(std::size_t node) const { return ring_weight_[node / n_phi_]; }

  Vec3 position(int ring, int lon) const {
    return {sin_theta_[ring] * std::cos(phi_[lon]), sin_theta_[ring] * std::sin(phi_[lon]), cos_theta_[ring]};
  }
  Vec3 position(std::size_t node) const {
    return position(static_cast<int>(node / n_phi_), static_cast<int>(node % n_phi_));
  }

  double total_weight() const {
    double s = 0.0;
    for (double w : ring_weight_) s += w * n_phi_;
    return s;
  }

  /// Quadrature of per-node values.
  double integrate(std::span<const double> values) const {
    double total = 0.0;
    for (int i = 0; i < n_theta_; ++i) {
      double ring = 0.0;
      for (int j = 0; j < n_phi_; ++j) ring += values[index(i, j)];
      total += ring_weight_[i] * ring;
    }
    return total;
  }

 private:
  int n_theta_;
  int n_phi_;
  std::vector<double> theta_, cos_theta_, sin_theta_, ring_weight_, phi_;
};

/// Legendre polynomial P_l(x) by the three-term recurrence.
inline double legendre_p(int ell, double x) {
  if (ell < 0) throw std::domain_error("legendre_p: negative degree");
  if (ell == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 1; k < ell; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

constexpr std::size_t tri_index(int ell, int m) noexcept { return static_cast<std::size_t>(ell * (ell + 1) / 2 + m); }

/// Orthonormalized associated Legendre functions
///   Pbar_lm(x) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x),  0 <= m <= l <= L,
/// without the Condon-Shortley phase, stored at tri_index(l, m).
/// Sectoral terms first, then upward in l at fixed m.
inline void normalized_legendre_table(int band_limit, double x, double sin_theta, std::span<double> out) {
  out[0] = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 1; m <= band_limit; ++m)
    out[tri_index(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_theta * out[tri_index(m - 1, m - 1)];
  for (int m = 0; m <= band_limit; ++m) {
    if (m + 1 <= band_limit) out[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * out[tri_index(m, m)];
    for (int ell = m + 2; ell <= band_limit; ++ell) {
      const double l2 = static_cast<double>(ell) * ell, m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double b = std::sqrt(((ell - 1.0) * (ell - 1.0) - m2) / (4.0 * (ell - 1.0) * (ell - 1.0) - 1.0));
      out[tri_index(ell, m)] = a * (x * out[tri_index(ell - 1, m)] - b * out[tri_index(ell - 2, m)]);
    }
  }
}

/// Real orthonormal spherical harmonic:
///   m = 0: Pbar_l0(cos theta)
///   m > 0: sqrt(2) Pbar_lm(cos theta) cos(m phi)
///   m < 0: sqrt(2) Pbar_l|m|(cos theta) sin(|m| phi)
inline double eval_sph_harm(int ell, int m, double theta, double phi) {
  if (ell < 0 || m > ell || -m > ell) throw std::domain_error("eval_sph_harm: need |m| <= l");
  std::vector<double> table(tri_index(ell, ell) + 1);
  normalized_legendre_table(ell, std::cos(theta), std::sin(theta), table);
  const int am = m < 0 ? -m : m;
  const double p = table[tri_index(ell, am)];
  if (m == 0) return p;
  return std::numbers::sqrt2 * p * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

inline double eval_sph_harm(int ell, int m, const SphereGrid& grid, std::size_t node) {
  const int ring = static_cast<int>(node / grid.n_phi());
  const int lon = static_cast<int>(node % grid.n_phi());
  return eval_sph_harm(ell, m, grid.theta(ring), grid.phi(lon));
}

/// Field values on every grid node at one time, plus the exact values at
/// the two poles (which are not grid nodes).
struct FieldSlice {
  std::shared_ptr<const SphereGrid> grid;
  std::size_t t = 0;
  std::vector<double> values;
  double north_pole = 0.0;
  double south_pole = 0.0;

  FieldSlice negated() const {
    FieldSlice out = *this;
    for (double& v : out.values) v = -v;
    out.north_pole = -north_pole;
    out.south_pole = -south_pole;
    return out;
  }
};

/// Builds a slice from explicit node values; pole values are taken as the
/// mean of the nearest ring.
inline FieldSlice make_slice(std::shared_ptr<const SphereGrid> grid, std::vector<double> values, std::size_t t = 0) {
  if (values.size() != grid->size()) throw std::invalid_argument("make_slice: value count does not match grid");
  FieldSlice s{grid, t, std::move(values), 0.0, 0.0};
  const int last = grid->n_theta() - 1;
  for (int j = 0; j < grid->n_phi(); ++j) {
    s.north_pole += s.values[grid->index(0, j)];
    s.south_pole += s.values[grid->index(last, j)];
  }
  s.north_pole /= grid->n_phi();
  s.south_pole /= grid->n_phi();
  return s;
}

/// Ring-wise synthesis with the associated Legendre values and the
/// longitude trigonometric tables precomputed once per (grid, L).
/// Each slice costs O(n_theta L^2 + n_nodes L).
class Synthesizer {
 public:
  Synthesizer(std::shared_ptr<const SphereGrid> grid, int band_limit)
      : grid_(std::move(grid)), band_limit_(band_limit), tri_size_(tri_index(band_limit, band_limit) + 1) {
    if (band_limit < 0) throw std::domain_error("Synthesizer: negative band limit");
    const int nt = grid_->n_theta(), np = grid_->n_phi();
    legendre_.resize(static_cast<std::size_t>(nt) * tri_size_);
    for (int i = 0; i < nt; ++i)
      normalized_legendre_table(band_limit_, grid_->cos_theta(i), grid_->sin_theta(i),
                                std::span<double>(legendre_).subspan(i * tri_size_, tri_size_));
    cos_.resize(static_cast<std::size_t>(np) * (band_limit_ + 1));
    sin_.resize(cos_.size());
    for (int j = 0; j < np; ++j)
      for (int m = 0; m <= band_limit_; ++m) {
        cos_[j * (band_limit_ + 1) + m] = std::numbers::sqrt2 * std::cos(m * grid_->phi(j));
        sin_[j * (band_limit_ + 1) + m] = std::numbers::sqrt2 * std::sin(m * grid_->phi(j));
      }
    pole_.resize(band_limit_ + 1);
    for (int ell = 0; ell <= band_limit_; ++ell) pole_[ell] = std::sqrt((2.0 * ell + 1.0) / (4.0 * std::numbers::pi));
  }

  const std::shared_ptr<const SphereGrid>& grid() const { return grid_; }
  int band_limit() const { return band_limit_; }

  /// coeffs holds a_{lm} at lm_index(l, m) for l <= L.
  FieldSlice operator()(std::span<const double> coeffs, std::size_t t = 0) const {
    const int L = band_limit_;
    if (coeffs.size() < static_cast<std::size_t>((L + 1) * (L + 1)))
      throw std::invalid_argument("Synthesizer: too few coefficients");
    const int nt = grid_->n_theta(), np = grid_->n_phi();
    FieldSlice slice{grid_, t, std::vector<double>(grid_->size()), 0.0, 0.0};
    std::vector<double> cm(L + 1), sm(L + 1);
    for (int i = 0; i < nt; ++i) {
      const double* p = legendre_.data() + i * tri_size_;
      for (int m = 0; m <= L; ++m) {
        double c = 0.0, s = 0.0;
        for (int ell = m; ell <= L; ++ell) {
          c += coeffs[lm_index(ell, m)] * p[tri_index(ell, m)];
          if (m > 0) s += coeffs[lm_index(ell, -m)] * p[tri_index(ell, m)];
        }
        cm[m] = c;
        sm[m] = s;
      }
      double* row = slice.values.data() + grid_->index(i, 0);
      for (int j = 0; j < np; ++j) {
        const double* cj = cos_.data() + j * (L + 1);
        const double* sj = sin_.data() + j * (L + 1);
        double v = cm[0];
        for (int m = 1; m <= L; ++m) v += cm[m] * cj[m] + sm[m] * sj[m];
        row[j] = v;
      }
    }
    for (int ell = 0; ell <= L; ++ell) {
      const double a = coeffs[lm_index(ell, 0)] * pole_[ell];
      slice.north_pole += a;
      slice.south_pole += (ell % 2 == 0) ? a : -a;
    }
    return slice;
  }

 private:
  std::shared_ptr<const SphereGrid> grid_;
  int band_limit_;
  std::size_t tri_size_;
  std::vector<double> legendre_, cos_, sin_, pole_;
};

/// Z(x, t) = sum_{l <= L} sum_m a_lm(t) Y_lm(x) on every grid node (t is 0-based).
inline FieldSlice synthesize(const CoefficientPanel& panel, std::shared_ptr<const SphereGrid> grid, std::size_t t) {
  if (t >= panel.length()) throw std::out_of_range("synthesize: time index out of range");
  return Synthesizer(std::move(grid), panel.band_limit())(panel.slice(t), t);
}

/// Sample angular power: sum_m a_lm(t)^2 / (2l+1).
inline double hat_c_ell(const CoefficientPanel& panel, int ell, std::size_t t) {
  if (ell < 0 || ell > panel.band_limit()) throw std::out_of_range("hat_c_ell: multipole out of range");
  double s = 0.0;
  for (int m = -ell; m <= ell; ++m) s += panel.at(ell, m, t) * panel.at(ell, m, t);
  return s / (2.0 * ell + 1.0);
}

}  // namespace sphcoint
