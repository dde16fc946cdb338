#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crps_oracle.hpp"
#include "gradcheck.hpp"
#include "stoic/errors.hpp"
#include "stoic/metrics.hpp"

using namespace stoic;
using namespace stoic::metrics;
using stoic::testing::crps_quadrature;

namespace {

ForecastDistribution dist_of(std::vector<double> mu, std::vector<double> sigma) {
  return {Tensor::row(std::move(mu)), Tensor::row(std::move(sigma))};
}

std::vector<ReliabilityPoint> constant_coverage(double c) {
  std::vector<ReliabilityPoint> out;
  for (double l : default_levels()) out.push_back({l, c});
  return out;
}

}  // namespace

TEST_CASE("rmse") {
  CHECK(rmse(Tensor::row({1, 2, 3}), Tensor::row({1, 2, 3})) == 0.0);
  CHECK(rmse(Tensor::row({0, 0}), Tensor::row({3, 4})) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse(Tensor::row({1, 2, 3}), Tensor::row({1.5, 2.5, 3.5})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(rmse(Tensor::row({1, 2}), Tensor::row({1, 2, 3})), ShapeError);
  CHECK_THROWS_AS(rmse(Tensor::matrix(0, 2), Tensor::matrix(0, 2)), std::invalid_argument);
}

TEST_CASE("crps: reference values") {
  CHECK(crps_gaussian(1.5, 0.0, -2.0) == 3.5);
  const double at_center = 2.0 / std::sqrt(2.0 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi);
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(at_center).epsilon(1e-15));
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(0.233695).epsilon(1e-6));
  CHECK(std::abs(crps_gaussian(0.0, 1.0, 0.0) - crps_quadrature(0.0, 1.0, 0.0)) < 1e-9);
  CHECK(std::abs(crps_gaussian(0.0, 1.0, 10.0) - crps_quadrature(0.0, 1.0, 10.0)) < 1e-6);
  CHECK(crps_gaussian(0.0, 1.0, 10.0) < 10.0);
  CHECK_THROWS_AS(crps_gaussian(0.0, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("crps: closed form agrees with quadrature on 1000 random triples") {
  RngStream rng(2024, "crps-grid");
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double mu = 10.0 * (2.0 * rng.uniform() - 1.0);
    const double sigma = 0.01 + 5.0 * rng.uniform();
    const double y = mu + sigma * 6.0 * (2.0 * rng.uniform() - 1.0);
    worst = std::max(worst, std::abs(crps_gaussian(mu, sigma, y) - crps_quadrature(mu, sigma, y)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("crps: nonnegativity, symmetry, translation and scale") {
  RngStream rng(5, "crps-props");
  for (int k = 0; k < 1000; ++k) {
    const double mu = 4.0 * (2.0 * rng.uniform() - 1.0);
    const double sigma = 3.0 * rng.uniform();
    const double y = 4.0 * (2.0 * rng.uniform() - 1.0);
    const double a = 5.0 * (2.0 * rng.uniform() - 1.0);
    const double s = 0.1 + 4.0 * rng.uniform();
    const double base = crps_gaussian(mu, sigma, y);
    CHECK(base >= 0.0);
    CHECK(crps_gaussian(y, sigma, mu) == doctest::Approx(base).epsilon(1e-12));
    CHECK(std::abs(crps_gaussian(mu + a, sigma, y + a) - base) <= 1e-10);
    CHECK(std::abs(crps_gaussian(s * mu, s * sigma, s * y) - s * base) <= 1e-10);
  }
  CHECK(crps_gaussian(0.3, 0.0, 0.3) == 0.0);
  CHECK(crps_gaussian(0.3, 1e-3, 0.3) > 0.0);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {0.025, 0.3, 0.5, 0.75, 0.975}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
}

TEST_CASE("coverage: reference cases") {
  const Tensor y = Tensor::row({0.2, -1.0, 3.0});
  CHECK(coverage(dist_of({0.2, -1.0, 3.0}, {1, 1, 1}), y, 0.95) == 1.0);
  CHECK(coverage(dist_of({0.3, -1.1, 3.1}, {1e-12, 1e-12, 1e-12}), y, 0.95) == 0.0);
  CHECK_THROWS_AS(coverage(dist_of({0, 0, 0}, {1, 1, 1}), y, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(coverage(dist_of({0, 0, 0}, {1, 1, 1}), y, 0.0), std::invalid_argument);
}

TEST_CASE("coverage: self-consistent draws and monotonicity") {
  RngStream rng(77, "cov-mc");
  const std::size_t n = 10000;
  Tensor mu = Tensor::matrix(1, n), sigma = Tensor::matrix(1, n), y = Tensor::matrix(1, n);
  for (std::size_t k = 0; k < n; ++k) {
    mu[k] = 3.0 * rng.normal();
    sigma[k] = 0.2 + rng.uniform();
    y[k] = mu[k] + sigma[k] * rng.normal();
  }
  const ForecastDistribution d{mu, sigma};
  CHECK(std::abs(coverage(d, y, 0.5) - 0.5) <= 0.02);
  double prev = 0.0;
  for (double c : default_levels()) {
    const double cov = coverage(d, y, c);
    CHECK(cov >= prev);
    prev = cov;
  }
  const double cs = confidence_score(d, y);
  CHECK(cs > 0.95);
  CHECK(cs <= 1.0);
}

TEST_CASE("confidence score: reference cases") {
  std::vector<ReliabilityPoint> perfect;
  for (double l : default_levels()) perfect.push_back({l, l});
  CHECK(confidence_score(perfect) == 1.0);
  CHECK(confidence_score(constant_coverage(1.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(confidence_score(constant_coverage(0.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(confidence_score({}), std::invalid_argument);
  CHECK(default_levels().size() == 19);
  RngStream rng(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<ReliabilityPoint> pts;
    for (double l : default_levels()) pts.push_back({l, rng.uniform()});
    const double cs = confidence_score(pts);
    CHECK((cs >= 0.0 && cs <= 1.0));
  }
}

TEST_CASE("crps increase percent") {
  CHECK(crps_increase_percent(0.4, 0.4) == 0.0);
  CHECK(crps_increase_percent(0.5, 0.6) == doctest::Approx(20.0).epsilon(1e-13));
  CHECK(crps_increase_percent(0.5, 0.45) < 0.0);
  CHECK_THROWS_AS(crps_increase_percent(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("accumulator matches one-shot metrics") {
  RngStream rng(8);
  const Tensor mu = stoic::testing::random_tensor(4, 3, rng);
  Tensor sigma = stoic::testing::random_tensor(4, 3, rng);
  for (auto& v : sigma.values()) v = std::abs(v) + 0.1;
  const Tensor y = stoic::testing::random_tensor(4, 3, rng);
  const ForecastDistribution d{mu, sigma};
  EvalAccumulator acc;
  acc.add(d, y);
  const EvalReport r = acc.report();
  CHECK(r.rmse == doctest::Approx(rmse(mu, y)).epsilon(1e-14));
  CHECK(r.crps == doctest::Approx(mean_crps(d, y)).epsilon(1e-14));
  CHECK(r.cells == 12);
  CHECK(r.windows == 1);
  CHECK(r.reliability.size() == 19);
  CHECK_THROWS_AS(EvalAccumulator({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(EvalAccumulator().report(), std::invalid_argument);
}
