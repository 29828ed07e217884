#pragma once

// Geometric functionals of excursion sets {x : Z(x,t) > u} on the grid:
// area, boundary length and Hermite chaos projections, with their Gaussian
// means and the exact first/second chaos components used for validation.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphcoint/fgn.hpp"
#include "sphcoint/sphere.hpp"

namespace sphcoint {

/// Standard normal density.
inline double phi(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

/// Standard normal upper tail 1 - Phi(u).
inline double normal_tail(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

/// Probabilists' Hermite polynomial He_q(x).
inline double hermite(int q, double x) {
  if (q < 0) throw std::domain_error("hermite: negative order");
  if (q == 0) return 1.0;
  double h0 = 1.0, h1 = x;
  for (int k = 1; k < q; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

enum class FunctionalKind { area, length, chaos, coint_residual, field };

inline std::string to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::area: return "area";
    case FunctionalKind::length: return "length";
    case FunctionalKind::chaos: return "chaos";
    case FunctionalKind::coint_residual: return "coint_residual";
    case FunctionalKind::field: return "field";
  }
  return "unknown";
}

/// Time series of one functional. When centered, `centering` is the
/// analytic mean that was subtracted.
struct FunctionalSeries {
  FunctionalKind kind = FunctionalKind::area;
  double level = 0.0;
  int order = 0;  // chaos order for kind == chaos
  std::vector<double> values;
  bool centered = false;
  double centering = 0.0;

  std::size_t length() const { return values.size(); }

  FunctionalSeries centered_by(double mean) const {
    if (centered) throw std::logic_error("FunctionalSeries: already centered");
    FunctionalSeries out = *this;
    for (double& v : out.values) v -= mean;
    out.centered = true;
    out.centering = mean;
    return out;
  }
};

inline double excursion_area(const FieldSlice& slice, double u) {
  const SphereGrid& g = *slice.grid;
  double total = 0.0;
  for (int i = 0; i < g.n_theta(); ++i) {
    int count = 0;
    const double* row = slice.values.data() + g.index(i, 0);
    for (int j = 0; j < g.n_phi(); ++j) count += row[j] > u ? 1 : 0;
    total += g.ring_weight(i) * count;
  }
  return total;
}

/// Integral of He_q(Z) over the sphere by quadrature.
inline double chaos_projection(const FieldSlice& slice, int q) {
  if (q < 1) throw std::domain_error("chaos_projection: order must be >= 1");
  const SphereGrid& g = *slice.grid;
  double total = 0.0;
  for (int i = 0; i < g.n_theta(); ++i) {
    double ring = 0.0;
    const double* row = slice.values.data() + g.index(i, 0);
    for (int j = 0; j < g.n_phi(); ++j) ring += hermite(q, row[j]);
    total += g.ring_weight(i) * ring;
  }
  return total;
}

namespace detail {

struct Vertex {
  double theta, phi, value;
};

inline Vec3 crossing(const Vertex& a, const Vertex& b, double u) {
  const double s = (u - a.value) / (b.value - a.value);
  return unit_vector(a.theta + s * (b.theta - a.theta), a.phi + s * (b.phi - a.phi));
}

// Contour length inside one quadrilateral (vertices in cyclic order).
inline double quad_length(const std::array<Vertex, 4>& v, double u) {
  std::array<bool, 4> above{};
  int n_above = 0;
  for (int k = 0; k < 4; ++k) {
    above[k] = v[k].value > u;
    n_above += above[k] ? 1 : 0;
  }
  if (n_above == 0 || n_above == 4) return 0.0;
  std::array<Vec3, 4> pt{};
  std::array<bool, 4> cut{};
  int n_cut = 0;
  for (int e = 0; e < 4; ++e) {
    const int a = e, b = (e + 1) % 4;
    if (above[a] != above[b]) {
      pt[e] = crossing(v[a], v[b], u);
      cut[e] = true;
      ++n_cut;
    }
  }
  if (n_cut == 2) {
    int first = -1, second = -1;
    for (int e = 0; e < 4; ++e)
      if (cut[e]) (first < 0 ? first : second) = e;
    return arc_length(pt[first], pt[second]);
  }
  // Saddle: edge e joins vertices e and e+1, so corner k sits between edges k-1 and k.
  const double center = 0.25 * (v[0].value + v[1].value + v[2].value + v[3].value);
  if ((center > u) == above[0]) return arc_length(pt[0], pt[1]) + arc_length(pt[2], pt[3]);
  return arc_length(pt[3], pt[0]) + arc_length(pt[1], pt[2]);
}

// Triangle joining a pole to two neighbouring ring nodes. The pole vertex
// takes the longitude of whichever ring node it is paired with, so every
// edge runs along a meridian or the ring.
inline double pole_fan_length(double pole_theta, double pole_value, double ring_theta, double z0, double z1,
                              double p0, double p1, double u) {
  const bool ap = pole_value > u, a0 = z0 > u, a1 = z1 > u;
  if (ap == a0 && a0 == a1) return 0.0;
  const Vertex pole0{pole_theta, p0, pole_value}, pole1{pole_theta, p1, pole_value};
  const Vertex r0{ring_theta, p0, z0}, r1{ring_theta, p1, z1};
  Vec3 pts[2];
  int n = 0;
  if (ap != a0) pts[n++] = crossing(pole0, r0, u);
  if (a0 != a1) pts[n++] = crossing(r0, r1, u);
  if (a1 != ap) pts[n++] = crossing(r1, pole1, u);
  return arc_length(pts[0], pts[1]);
}

}  // namespace detail

/// Length of the level curve {Z = u}, traced cell by cell.
///
/// Lat-lon quadrilaterals between adjacent rings, plus triangle fans joining
/// each pole to the nearest ring. Crossings are placed by linear
/// interpolation in (theta, phi); each segment contributes its great-circle
/// length. Saddle cells are resolved by the mean of the four corners.
inline double boundary_length(const FieldSlice& slice, double u) {
  using detail::Vertex;
  const SphereGrid& g = *slice.grid;
  const int nt = g.n_theta(), np = g.n_phi();
  const double dphi = 2.0 * std::numbers::pi / np;
  const auto& z = slice.values;
  double total = 0.0;
  for (int i = 0; i + 1 < nt; ++i) {
    const double t0 = g.theta(i), t1 = g.theta(i + 1);
    for (int j = 0; j < np; ++j) {
      const int jn = (j + 1) % np;
      const double p0 = g.phi(j), p1 = p0 + dphi;
      const double a = z[g.index(i, j)], b = z[g.index(i, jn)], c = z[g.index(i + 1, jn)], d = z[g.index(i + 1, j)];
      const bool sa = a > u;
      if (sa == (b > u) && sa == (c > u) && sa == (d > u)) continue;
      total += detail::quad_length({Vertex{t0, p0, a}, Vertex{t0, p1, b}, Vertex{t1, p1, c}, Vertex{t1, p0, d}}, u);
    }
  }
  const double tn = g.theta(0), ts = g.theta(nt - 1);
  for (int j = 0; j < np; ++j) {
    const int jn = (j + 1) % np;
    const double p0 = g.phi(j), p1 = p0 + dphi;
    total += detail::pole_fan_length(0.0, slice.north_pole, tn, z[g.index(0, j)], z[g.index(0, jn)], p0, p1, u);
    total += detail::pole_fan_length(std::numbers::pi, slice.south_pole, ts, z[g.index(nt - 1, j)],
                                     z[g.index(nt - 1, jn)], p0, p1, u);
  }
  return total;
}

/// E[A(u)] = 4 pi (1 - Phi(u)).
inline double expected_area(double u) { return 4.0 * std::numbers::pi * normal_tail(u); }

/// Kac-Rice mean boundary length 2 pi sigma1 exp(-u^2/2).
inline double expected_length(double u, double sigma1) { return 2.0 * std::numbers::pi * sigma1 * std::exp(-0.5 * u * u); }

/// sigma1^2 = sum_l (2l+1)/(4 pi) C_l l(l+1)/2.
inline double sigma1_true(const MultipoleSpec& spec) {
  double s = 0.0;
  for (int ell = 0; ell <= spec.band_limit(); ++ell) {
    const double lambda = static_cast<double>(ell) * (ell + 1);
    s += (2.0 * ell + 1.0) * spec.c0(ell) * lambda / 2.0;
  }
  return std::sqrt(s / (4.0 * std::numbers::pi));
}

/// First chaos of the area: sqrt(4 pi) phi(u) a_00(t).
inline double first_chaos_area(const CoefficientPanel& panel, double u, std::size_t t) {
  return std::sqrt(4.0 * std::numbers::pi) * phi(u) * panel.at(0, 0, t);
}

/// First chaos of the length: sigma1 sqrt(2) pi u phi(u) a_00(t).
inline double first_chaos_length(const CoefficientPanel& panel, double u, std::size_t t, double sigma1) {
  return sigma1 * std::numbers::sqrt2 * std::numbers::pi * u * phi(u) * panel.at(0, 0, t);
}

/// Second chaos of the area: (u phi(u) / 2) sum_l (2l+1) (Chat_l(t) - C_l).
inline double second_chaos_area(const CoefficientPanel& panel, double u, std::size_t t) {
  const auto& spec = panel.spec();
  double s = 0.0;
  for (int ell = 0; ell <= spec.band_limit(); ++ell) s += (2.0 * ell + 1.0) * (hat_c_ell(panel, ell, t) - spec.c0(ell));
  return 0.5 * u * phi(u) * s;
}

/// One multipole's summand of the length's second chaos.
inline double second_chaos_length_term(const CoefficientPanel& panel, double u, std::size_t t, double sigma1, int ell) {
  const double lambda = static_cast<double>(ell) * (ell + 1);
  const double bracket = (u * u - 1.0) + (lambda / 2.0) / (sigma1 * sigma1);
  return 0.5 * sigma1 * std::sqrt(std::numbers::pi / 2.0) * phi(u) * (2.0 * ell + 1.0) * bracket *
         (hat_c_ell(panel, ell, t) - panel.spec().c0(ell));
}

/// Second chaos of the length:
/// (sigma1/2) sqrt(pi/2) phi(u) sum_l (2l+1) {(u^2-1) + (lambda_l/2)/sigma1^2} (Chat_l(t) - C_l).
inline double second_chaos_length(const CoefficientPanel& panel, double u, std::size_t t, double sigma1) {
  double s = 0.0;
  for (int ell = 0; ell <= panel.band_limit(); ++ell) s += second_chaos_length_term(panel, u, t, sigma1, ell);
  return s;
}

}  // namespace sphcoint
