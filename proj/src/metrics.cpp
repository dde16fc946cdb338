#include "stoic/metrics.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "stoic/errors.hpp"

namespace stoic::metrics {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                     b.shape_string() + " differ");
  }
}

void check_level(double c) {
  if (!(c > 0.0 && c < 1.0)) {
    throw std::invalid_argument("coverage level must lie in (0, 1), got " + std::to_string(c));
  }
}

}  // namespace

double rmse(const Tensor& mu, const Tensor& y) {
  check_same(mu, y, "rmse");
  if (y.size() == 0) throw std::invalid_argument("rmse: empty input");
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += (y[k] - mu[k]) * (y[k] - mu[k]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0, 1)");
  return std::numbers::sqrt2 * boost::math::erf_inv(2.0 * p - 1.0);
}

double crps_gaussian(double mu, double sigma, double y) {
  if (sigma < 0.0) throw std::invalid_argument("crps_gaussian: negative sigma");
  if (sigma == 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

double mean_crps(const ForecastDistribution& dist, const Tensor& y) {
  check_same(dist.mu, y, "mean_crps");
  check_same(dist.sigma, y, "mean_crps");
  if (y.size() == 0) throw std::invalid_argument("mean_crps: empty input");
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += crps_gaussian(dist.mu[k], dist.sigma[k], y[k]);
  return s / static_cast<double>(y.size());
}

double coverage(const ForecastDistribution& dist, const Tensor& y, double level) {
  check_level(level);
  EvalAccumulator acc({level});
  acc.add(dist, y);
  return acc.report().reliability.front().coverage;
}

std::vector<double> default_levels() {
  std::vector<double> out;
  for (int k = 1; k <= 19; ++k) out.push_back(0.05 * k);
  return out;
}

double confidence_score(const std::vector<ReliabilityPoint>& points) {
  if (points.empty()) throw std::invalid_argument("confidence_score: no levels");
  double s = 0.0;
  for (const auto& p : points) s += std::abs(p.coverage - p.level);
  return 1.0 - s / static_cast<double>(points.size());
}

double confidence_score(const ForecastDistribution& dist, const Tensor& y,
                        const std::vector<double>& levels) {
  if (levels.empty()) throw std::invalid_argument("confidence_score: no levels");
  EvalAccumulator acc(levels);
  acc.add(dist, y);
  return acc.report().confidence_score;
}

double crps_increase_percent(double crps_clean, double crps_noisy) {
  if (!(crps_clean > 0.0)) throw std::invalid_argument("crps_increase_percent: clean CRPS must be > 0");
  return 100.0 * (crps_noisy - crps_clean) / crps_clean;
}

EvalAccumulator::EvalAccumulator(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw std::invalid_argument("EvalAccumulator: no levels");
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    check_level(levels_[k]);
    if (k > 0 && !(levels_[k] > levels_[k - 1])) {
      throw std::invalid_argument("EvalAccumulator: levels must be strictly increasing");
    }
    quantiles_.push_back(normal_quantile(0.5 * (1.0 + levels_[k])));
  }
  covered_.assign(levels_.size(), 0);
}

void EvalAccumulator::add(const ForecastDistribution& dist, const Tensor& y) {
  check_same(dist.mu, y, "evaluate");
  check_same(dist.sigma, y, "evaluate");
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double err = y[c] - dist.mu[c];
    squared_error_ += err * err;
    crps_sum_ += crps_gaussian(dist.mu[c], dist.sigma[c], y[c]);
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      if (std::abs(err) <= quantiles_[k] * dist.sigma[c]) ++covered_[k];
    }
  }
  cells_ += y.size();
  ++windows_;
}

EvalReport EvalAccumulator::report() const {
  if (cells_ == 0) throw std::invalid_argument("evaluation saw no forecast cells");
  EvalReport r;
  const double n = static_cast<double>(cells_);
  r.rmse = std::sqrt(squared_error_ / n);
  r.crps = crps_sum_ / n;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    r.reliability.push_back({levels_[k], static_cast<double>(covered_[k]) / n});
  }
  r.confidence_score = confidence_score(r.reliability);
  r.cells = cells_;
  r.windows = windows_;
  return r;
}

}  // namespace stoic::metrics
