#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "stoic/checkpoint.hpp"
#include "stoic/metrics.hpp"

namespace stoic {

// CSV named by config.data, or the synthetic panel config.synth describes.
data::SeriesPanel load_panel(const RunConfig& config);

// Normalized panel with its window starts and split. Statistics are fitted on
// the time steps the training windows cover unless `fixed` is given.
struct PreparedData {
  std::vector<std::string> names;
  data::NormStats norm;
  Tensor raw;         // T x N, original units
  Tensor normalized;  // T x N
  std::vector<std::size_t> starts;
  data::WindowSplit split;
};

PreparedData prepare(const RunConfig& config, const data::SeriesPanel& panel,
                     const data::NormStats* fixed = nullptr);

struct EpochLog {
  std::size_t epoch = 0;
  double total = 0.0;
  double nll = 0.0;
  double kl_latent = 0.0;
  double kl_graph = 0.0;
  double val_crps = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  bool aborted = false;
  std::string abort_message;
};

// Called after every epoch; tests use it to watch progress.
using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const RunConfig& config, const data::SeriesPanel& panel,
                  const EpochCallback& on_epoch = {});
void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

// Mean CRPS in normalized units of the predictive over the given windows.
double validation_crps(StoicModel& model, const ReferenceSet& refs, const PreparedData& prep,
                       const std::vector<std::size_t>& starts, std::size_t samples,
                       std::size_t batch, RngStream& rng);

enum class Slice { kTrain, kVal, kTest, kAll };
Slice parse_slice(const std::string& text);

struct EvalOptions {
  Slice slice = Slice::kTest;
  double rho = 0.0;           // input noise level
  std::size_t samples = 0;    // 0: the config's eval_samples
  std::uint64_t seed = 0;     // 0: derived from the config seed
};

// Forecasts in original units, one distribution per window ([N x horizon]).
struct EvalOutput {
  metrics::EvalReport report;
  std::vector<ForecastDistribution> forecasts;
  std::vector<std::size_t> starts;
};

EvalOutput evaluate(const Checkpoint& ckpt, const data::SeriesPanel& panel,
                    const EvalOptions& options = {});

void write_metrics(const metrics::EvalReport& report, const std::string& label,
                   const std::filesystem::path& path);
void write_reliability(const metrics::EvalReport& report, const std::filesystem::path& path);

std::vector<std::size_t> slice_starts(const PreparedData& prep, Slice slice);

}  // namespace stoic
