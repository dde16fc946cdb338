#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stoic/adam.hpp"
#include "stoic/train.hpp"

namespace stoic {

// Per-cell Gaussian from K point forecasts: mean and population std, floored.
ForecastDistribution ensemble_moments(const std::vector<Tensor>& member_means);

inline constexpr double kEnsembleSigmaFloor = 1e-4;

// Point forecaster: bi-GRU over the window (group "base.gru") and a direct
// linear head 2H -> horizon ("base.head"), trained on squared error.
class PointForecaster {
 public:
  PointForecaster(std::size_t window, std::size_t hidden, std::size_t horizon, std::uint64_t seed);

  ParamStore& params() noexcept { return store_; }
  Tensor predict(const Tensor& inputs);
  double train_step(const Tensor& inputs, const Tensor& targets, const AdamOptions& adam);

 private:
  std::size_t window_;
  std::size_t horizon_;
  ParamStore store_;
};

struct BaselineResult {
  metrics::EvalReport report;
  std::vector<std::size_t> member_epochs;
  double min_sigma = 0.0;
};

// Trains K members with seeds seed+1 ... seed+K (early stopping on validation
// RMSE with the config's patience) and evaluates their ensemble on `slice`.
BaselineResult ensemble_baseline(const RunConfig& config, const data::SeriesPanel& panel,
                                 std::size_t k, Slice slice = Slice::kTest);

struct RobustnessRow {
  double rho = 0.0;
  double crps = 0.0;
  double pct_increase = 0.0;
};

// Rows in the given order; the first level must be 0 and is the baseline.
std::vector<RobustnessRow> robustness_experiment(const Checkpoint& ckpt,
                                                 const data::SeriesPanel& panel,
                                                 const std::vector<double>& rhos,
                                                 const EvalOptions& options = {});
void write_robustness(const std::vector<RobustnessRow>& rows, const std::filesystem::path& path);

struct GraphRecovery {
  graph::GraphPosterior posterior;
  std::optional<graph::Correlation> correlation;
  std::vector<graph::ConfidentEdge> edges;
};

// Hard graph samples, one per window cycling through `slice`.
GraphRecovery graph_recovery_experiment(const Checkpoint& ckpt, const data::SeriesPanel& panel,
                                        const Tensor* reference, std::size_t samples = 100,
                                        double threshold = 0.8, Slice slice = Slice::kTest);
void write_confident_edges(const std::vector<graph::ConfidentEdge>& edges,
                           const std::vector<std::string>& names,
                           const std::filesystem::path& path);

}  // namespace stoic
