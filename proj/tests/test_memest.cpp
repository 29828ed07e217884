#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sphcoint/fgn.hpp"
#include "sphcoint/memest.hpp"

using namespace sphcoint;
using Catch::Approx;

TEST_CASE("autocov examples", "[memest]") {
  const std::vector<double> zero(50, 0.0);
  CHECK(autocov(zero, 3) == 0.0);
  std::vector<double> alt(51);
  for (std::size_t t = 0; t < alt.size(); ++t) alt[t] = t % 2 == 0 ? 1.0 : -1.0;
  CHECK(autocov(alt, 1) == -1.0);
  CHECK(autocov(alt, 2) == 1.0);
  CHECK_THROWS_AS(autocov(alt, 0), std::domain_error);
  CHECK_THROWS_AS(autocov(alt, 51), std::domain_error);
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  CHECK(autocov(x, 1) == Approx((2.0 + 6.0 + 12.0) / 3.0));
  const auto all = autocov_upto(x, 3);
  REQUIRE(all.size() == 3);
  CHECK(all[2] == Approx(4.0));
}

TEST_CASE("autocov is quadratic in scale", "[memest]") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<double> x(300), y(300);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = z(rng);
    y[t] = -2.5 * x[t];
  }
  for (std::size_t tau : {1u, 7u, 299u}) CHECK(autocov(y, tau) == Approx(6.25 * autocov(x, tau)).epsilon(1e-13));
}

TEST_CASE("autocov of white noise is centred", "[memest][mc]") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> r;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> x(512);
    for (auto& v : x) v = z(rng);
    r.push_back(autocov(x, 1));
  }
  const auto m = oracle::moments(r);
  CHECK(std::abs(m.mean) < 3.0 * m.se);
}

TEST_CASE("lag_cutoff", "[memest]") {
  CHECK(lag_cutoff(1000) == 3);
  CHECK(lag_cutoff(999) == 2);
  CHECK(lag_cutoff(2) == 0);  // floor(log10 2) = 0
  CHECK(lag_cutoff(10) == 1);
  CHECK(lag_cutoff(9) == 0);
  CHECK_THROWS_AS(lag_cutoff(1), std::domain_error);
  CHECK(LagRule::paper().lags(1000) == 3);
  CHECK(LagRule::power(0.3).lags(1000) == 7);
  CHECK(LagRule::power(0.3).lags(2) == 1);
}

TEST_CASE("logreg_decay on an exact power law", "[memest]") {
  std::vector<double> rho(20);
  for (std::size_t tau = 1; tau <= rho.size(); ++tau) rho[tau - 1] = 5.0 * std::pow(static_cast<double>(tau), -0.4);
  const auto fit = logreg_decay(rho, 20);
  CHECK(fit.slope == Approx(-0.4).margin(1e-12));
  CHECK(fit.intercept == Approx(std::log(5.0)).margin(1e-12));
  CHECK(fit.lags == 20);
  CHECK(fit.lags_excluded == 0);
  std::vector<double> scaled(rho), negated(rho);
  for (auto& v : scaled) v *= 3.0;
  for (auto& v : negated) v = -v;
  const auto fs = logreg_decay(scaled, 20);
  CHECK(fs.slope == Approx(fit.slope).margin(1e-12));
  CHECK(fs.intercept == Approx(fit.intercept + std::log(3.0)).margin(1e-12));
  CHECK(logreg_decay(negated, 20).slope == Approx(-0.4).margin(1e-12));
}

TEST_CASE("logreg_decay exclusions and errors", "[memest]") {
  std::vector<double> rho{1.0, 0.0, std::pow(3.0, -0.5)};
  const auto fit = logreg_decay(rho, 3);
  CHECK(fit.lags_excluded == 1);
  CHECK(fit.slope == Approx(-0.5).margin(1e-12));
  CHECK_THROWS_AS(logreg_decay(std::vector<double>{1.0, 0.0}, 2), std::domain_error);
  CHECK_THROWS_AS(logreg_decay(rho, 4), std::invalid_argument);
}

TEST_CASE("averaging autocovariances shrinks the spread of the fit", "[memest][mc]") {
  const std::size_t T = 256, q = 6;
  const FgnGenerator gen(T, 0.3, 1.0);
  std::uint64_t stream = 0;
  auto averaged_slope = [&](std::size_t B) {
    std::vector<double> avg(q, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      NormalStream s(stream_seed(77, stream++, 0, 0));
      const auto r = autocov_upto(gen.sample(s), q);
      for (std::size_t k = 0; k < q; ++k) avg[k] += r[k] / static_cast<double>(B);
    }
    return logreg_decay(avg, q).slope;
  };
  auto spread = [&](std::size_t B) {
    std::vector<double> s;
    for (int i = 0; i < 40; ++i) s.push_back(averaged_slope(B));
    return oracle::moments(s).se;
  };
  const double s10 = spread(10), s100 = spread(100);
  INFO("spread B=10: " << s10 << ", B=100: " << s100);
  CHECK(s10 / s100 > 2.0);
}
