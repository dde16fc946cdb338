#pragma once

#include <cstddef>
#include <vector>

#include "stoic/decoder.hpp"

namespace stoic::metrics {

double rmse(const Tensor& mu, const Tensor& y);

// Closed-form CRPS of N(mu, sigma^2) at y; sigma = 0 is the point mass.
double crps_gaussian(double mu, double sigma, double y);
double mean_crps(const ForecastDistribution& dist, const Tensor& y);

// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double p);

// Fraction of cells with y inside [mu - q sigma, mu + q sigma], q = Phi^-1((1 + c) / 2).
double coverage(const ForecastDistribution& dist, const Tensor& y, double level);

// 0.05, 0.10, ..., 0.95
std::vector<double> default_levels();

struct ReliabilityPoint {
  double level = 0.0;
  double coverage = 0.0;
};

// 1 - mean_k |coverage_k - level_k|
double confidence_score(const std::vector<ReliabilityPoint>& points);
double confidence_score(const ForecastDistribution& dist, const Tensor& y,
                        const std::vector<double>& levels = default_levels());

double crps_increase_percent(double crps_clean, double crps_noisy);

struct EvalReport {
  double rmse = 0.0;
  double crps = 0.0;
  double confidence_score = 0.0;
  std::vector<ReliabilityPoint> reliability;
  std::size_t cells = 0;
  std::size_t windows = 0;
};

// Streams forecast windows into running sums so evaluation never holds the
// whole test set.
class EvalAccumulator {
 public:
  explicit EvalAccumulator(std::vector<double> levels = default_levels());

  void add(const ForecastDistribution& dist, const Tensor& y);
  EvalReport report() const;

 private:
  std::vector<double> levels_;
  std::vector<double> quantiles_;
  std::vector<std::size_t> covered_;
  double squared_error_ = 0.0;
  double crps_sum_ = 0.0;
  std::size_t cells_ = 0;
  std::size_t windows_ = 0;
};

}  // namespace stoic::metrics
