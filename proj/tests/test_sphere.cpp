#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sphcoint/fgn.hpp"
#include "sphcoint/sphere.hpp"

using namespace sphcoint;
using Catch::Approx;
constexpr double pi = std::numbers::pi;

namespace {

std::vector<double> harmonic_on_grid(const SphereGrid& g, int l, int m) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = eval_sph_harm(l, m, g, k);
  return v;
}

double inner(const SphereGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> p(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] * b[k];
  return g.integrate(p);
}

}  // namespace

TEST_CASE("grid weights sum to 4 pi", "[sphere]") {
  for (int n : {2, 3, 8, 16, 33, 64, 128}) CHECK(SphereGrid(n).total_weight() == Approx(4.0 * pi).epsilon(1e-12));
  CHECK_THROWS_AS(SphereGrid(1), std::domain_error);
}

TEST_CASE("grid layout", "[sphere]") {
  const SphereGrid g(8);
  CHECK(g.n_phi() == 16);
  CHECK(g.size() == 128);
  CHECK(g.phi(0) == 0.0);
  CHECK(g.phi(1) == Approx(2.0 * pi / 16.0));
  for (int i = 0; i + 1 < g.n_theta(); ++i) CHECK(g.theta(i) < g.theta(i + 1));
  const auto p = g.position(3, 5);
  CHECK(dot(p, p) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("harmonic normalization and orthogonality under quadrature", "[sphere]") {
  const SphereGrid g16(16);
  const auto y32 = harmonic_on_grid(g16, 3, 2);
  CHECK(inner(g16, y32, y32) == Approx(1.0).epsilon(1e-10));
  const auto y21 = harmonic_on_grid(g16, 2, 1), y2m1 = harmonic_on_grid(g16, 2, -1);
  CHECK(std::abs(inner(g16, y21, y2m1)) < 1e-10);
  const auto y53 = harmonic_on_grid(g16, 5, 3);
  CHECK(inner(g16, y53, y53) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Gram matrix is the identity up to total degree 2 n_theta - 1", "[sphere]") {
  const SphereGrid g(8);
  const int L = 7;  // l + l' <= 14 <= 15
  std::vector<std::vector<double>> ys;
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) ys.push_back(harmonic_on_grid(g, l, m));
  double worst = 0.0;
  for (std::size_t a = 0; a < ys.size(); ++a)
    for (std::size_t b = a; b < ys.size(); ++b)
      worst = std::max(worst, std::abs(inner(g, ys[a], ys[b]) - (a == b ? 1.0 : 0.0)));
  CHECK(worst < 1e-10);
}

TEST_CASE("legendre_p", "[sphere]") {
  CHECK(legendre_p(0, 0.3) == 1.0);
  CHECK(legendre_p(1, 0.7) == Approx(0.7));
  CHECK(legendre_p(2, 0.5) == Approx(-0.125).epsilon(1e-15));
  for (int l = 0; l <= 3; ++l)
    for (double x : {-1.0, -0.4, 0.0, 0.25, 0.9, 1.0})
      CHECK(legendre_p(l, x) == Approx(oracle::legendre_small(l, x)).margin(1e-14));
  for (int l = 0; l <= 20; ++l) CHECK(legendre_p(l, 1.0) == Approx(1.0).epsilon(1e-13));
}

TEST_CASE("eval_sph_harm explicit forms", "[sphere]") {
  CHECK(eval_sph_harm(0, 0, 0.4, 1.3) == Approx(1.0 / std::sqrt(4.0 * pi)));
  CHECK(eval_sph_harm(0, 0, 2.0, 5.0) == Approx(0.282095).margin(1e-6));
  const double th = 0.9, ph = 2.1;
  CHECK(eval_sph_harm(1, 1, th, ph) == Approx(std::sqrt(3.0 / (4.0 * pi)) * std::sin(th) * std::cos(ph)));
  CHECK(eval_sph_harm(1, -1, th, ph) == Approx(std::sqrt(3.0 / (4.0 * pi)) * std::sin(th) * std::sin(ph)));
  CHECK(eval_sph_harm(2, 0, th, ph) ==
        Approx(std::sqrt(5.0 / (16.0 * pi)) * (3.0 * std::cos(th) * std::cos(th) - 1.0)));
  CHECK(eval_sph_harm(2, -2, th, ph) ==
        Approx(std::sqrt(15.0 / (16.0 * pi)) * std::sin(th) * std::sin(th) * std::sin(2.0 * ph)));
  CHECK_THROWS_AS(eval_sph_harm(2, 3, th, ph), std::domain_error);
  CHECK_THROWS_AS(eval_sph_harm(2, -3, th, ph), std::domain_error);
}

TEST_CASE("addition theorem", "[sphere]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(0.0, pi), up(0.0, 2.0 * pi);
  for (int trial = 0; trial < 20; ++trial) {
    const double t1 = ut(rng), p1 = up(rng), t2 = ut(rng), p2 = up(rng);
    const double c = dot(unit_vector(t1, p1), unit_vector(t2, p2));
    for (int l = 0; l <= 10; ++l) {
      double s = 0.0;
      for (int m = -l; m <= l; ++m) s += eval_sph_harm(l, m, t1, p1) * eval_sph_harm(l, m, t2, p2);
      CHECK(s == Approx((2.0 * l + 1.0) * legendre_p(l, c) / (4.0 * pi)).margin(1e-9));
    }
  }
}

TEST_CASE("synthesis of a constant", "[sphere]") {
  auto grid = std::make_shared<const SphereGrid>(8);
  std::vector<double> coeffs(9, 0.0);
  coeffs[0] = std::sqrt(4.0 * pi);
  const auto slice = Synthesizer(grid, 2)(coeffs);
  for (double v : slice.values) CHECK(v == Approx(1.0).epsilon(1e-14));
  CHECK(slice.north_pole == Approx(1.0));
  CHECK(slice.south_pole == Approx(1.0));
}

TEST_CASE("synthesis matches direct harmonic sums, including the poles", "[sphere]") {
  const int L = 6;
  auto grid = std::make_shared<const SphereGrid>(9);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  std::vector<double> coeffs((L + 1) * (L + 1));
  for (auto& c : coeffs) c = z(rng);
  const auto slice = Synthesizer(grid, L)(coeffs);
  auto direct = [&](double th, double ph) {
    double s = 0.0;
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) s += coeffs[lm_index(l, m)] * eval_sph_harm(l, m, th, ph);
    return s;
  };
  for (std::size_t k = 0; k < grid->size(); k += 7) {
    const int ring = static_cast<int>(k / grid->n_phi()), lon = static_cast<int>(k % grid->n_phi());
    CHECK(slice.values[k] == Approx(direct(grid->theta(ring), grid->phi(lon))).margin(1e-12));
  }
  CHECK(slice.north_pole == Approx(direct(0.0, 0.0)).margin(1e-12));
  CHECK(slice.south_pole == Approx(direct(pi, 0.0)).margin(1e-12));
}

TEST_CASE("synthesis is linear", "[sphere]") {
  const auto spec = MultipoleSpec::uniform(5, 0.3);
  const auto p1 = simulate_panel(spec, 4, 1), p2 = simulate_panel(spec, 4, 2);
  auto grid = std::make_shared<const SphereGrid>(12);
  const Synthesizer synth(grid, 5);
  std::vector<double> sum(p1.slice(2).size());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = p1.slice(2)[k] + p2.slice(2)[k];
  const auto a = synth(p1.slice(2)), b = synth(p2.slice(2)), c = synth(sum);
  for (std::size_t k = 0; k < c.values.size(); ++k) CHECK(c.values[k] == Approx(a.values[k] + b.values[k]).margin(1e-12));
  CHECK(synthesize(p1, grid, 2).values == a.values);
  CHECK_THROWS_AS(synthesize(p1, grid, 4), std::out_of_range);
}

TEST_CASE("quadrature of band-limited functions is grid independent", "[sphere]") {
  const auto spec = MultipoleSpec::uniform(10, 0.3);
  const auto panel = simulate_panel(spec, 2, 8);
  std::vector<double> integrals, squares;
  for (int n : {16, 32, 64}) {
    auto grid = std::make_shared<const SphereGrid>(n);
    const auto s = Synthesizer(grid, 10)(panel.slice(0));
    integrals.push_back(grid->integrate(s.values));
    std::vector<double> sq(s.values.size());
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = s.values[k] * s.values[k];
    squares.push_back(grid->integrate(sq));
  }
  CHECK(integrals[0] == Approx(std::sqrt(4.0 * pi) * panel.at(0, 0, 0)).margin(1e-9));
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(integrals[k] == Approx(integrals[0]).margin(1e-9));
    CHECK(squares[k] == Approx(squares[0]).margin(1e-9));
  }
  double parseval = 0.0;  // int Z^2 = sum a_lm^2
  for (double a : panel.slice(0)) parseval += a * a;
  CHECK(squares[0] == Approx(parseval).epsilon(1e-10));
}

TEST_CASE("field has unit variance and the isotropic covariance", "[sphere][mc]") {
  const auto spec = MultipoleSpec::uniform(10, 0.3);
  auto grid = std::make_shared<const SphereGrid>(8);
  const Synthesizer synth(grid, 10);
  const std::size_t a = grid->index(1, 0), b = grid->index(4, 5);
  const double c = dot(grid->position(a), grid->position(b));
  double cov_true = 0.0;
  for (int l = 0; l <= 10; ++l) cov_true += (2.0 * l + 1.0) * spec.c0(l) * legendre_p(l, c) / (4.0 * pi);
  std::vector<double> va, vb, vab, vnp;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const auto s = synth(simulate_panel(spec, 2, 31, rep).slice(0));
    va.push_back(s.values[a] * s.values[a]);
    vb.push_back(s.values[b] * s.values[b]);
    vab.push_back(s.values[a] * s.values[b]);
    vnp.push_back(s.north_pole * s.north_pole);
  }
  for (const auto* v : {&va, &vb, &vnp}) {
    const auto m = oracle::moments(*v);
    CHECK(std::abs(m.mean - 1.0) < 3.0 * m.se);
  }
  const auto m = oracle::moments(vab);
  CHECK(std::abs(m.mean - cov_true) < 3.0 * m.se);
}

TEST_CASE("hat_c_ell", "[sphere]") {
  const auto spec = MultipoleSpec::uniform(2, 0.3);
  CoefficientPanel p(spec, 3);
  CHECK(hat_c_ell(p, 1, 0) == 0.0);
  p.at(1, -1, 1) = p.at(1, 0, 1) = p.at(1, 1, 1) = 1.0;
  CHECK(hat_c_ell(p, 1, 1) == Approx(1.0));
  CHECK_THROWS_AS(hat_c_ell(p, 3, 0), std::out_of_range);
}

TEST_CASE("hat_c_ell is unbiased for C_l(0)", "[sphere][mc]") {
  const auto spec = MultipoleSpec::uniform(4, 0.3);
  std::vector<double> c2;
  for (std::uint64_t rep = 0; rep < 2000; ++rep) c2.push_back(hat_c_ell(simulate_panel(spec, 2, 77, rep), 2, 1));
  const auto m = oracle::moments(c2);
  CHECK(std::abs(m.mean - spec.c0(2)) < 3.0 * m.se);
}
