#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stoic/tensor.hpp"

namespace stoic::data {

// T x N panel: row t is one time step, column i one series.
struct SeriesPanel {
  std::vector<std::string> names;
  Tensor values;
  std::string frequency;

  std::size_t steps() const noexcept { return values.rows(); }
  std::size_t series() const noexcept { return names.size(); }
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;       // population standard deviation, or 1 if guarded
  std::vector<bool> constant;    // series whose std fell below 1e-8
};

inline constexpr double kMinStd = 1e-8;

// Header of series names, then one comma-separated row per time step.
SeriesPanel load_csv(const std::filesystem::path& path);
SeriesPanel parse_csv(std::istream& in, const std::string& source);
void save_csv(const SeriesPanel& panel, const std::filesystem::path& path);

// N x N matrix with a header of names (the format edgeprob.csv uses).
void save_matrix_csv(const Tensor& matrix, const std::vector<std::string>& names,
                     const std::filesystem::path& path);
Tensor load_matrix_csv(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

NormStats fit_norm(const Tensor& values);
Tensor apply_norm(const Tensor& values, const NormStats& stats);
Tensor inverse_transform(const Tensor& values, const NormStats& stats);
// Normalizes with statistics of the panel itself.
std::pair<SeriesPanel, NormStats> normalize(const SeriesPanel& panel);

// Windows stacked for the batched model: inputs [B*N x L], targets [B*N x H].
// Row b*N + i holds series i of window b.
struct WindowBatch {
  Tensor inputs;
  Tensor targets;
  std::vector<std::size_t> starts;
  std::size_t series = 0;

  std::size_t size() const noexcept { return starts.size(); }
};

// Starts 0, stride, 2 stride, ... while start + L + horizon <= T.
std::vector<std::size_t> window_starts(std::size_t steps, std::size_t window, std::size_t horizon,
                                       std::size_t stride);
WindowBatch gather_windows(const Tensor& values, const std::vector<std::size_t>& starts,
                           std::size_t window, std::size_t horizon);
// Same, taking inputs from `input_values` and targets from `target_values`.
WindowBatch gather_windows(const Tensor& input_values, const Tensor& target_values,
                           const std::vector<std::size_t>& starts, std::size_t window,
                           std::size_t horizon);
WindowBatch make_windows(const Tensor& values, std::size_t window, std::size_t horizon,
                         std::size_t stride);

struct WindowSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Contiguous split of window starts in time order.
WindowSplit split_windows(const std::vector<std::size_t>& starts, double train_fraction,
                          double val_fraction);

struct SyntheticSpec {
  std::size_t n = 10;
  std::size_t t = 2000;
  double density = 0.2;
  double coupling = 0.4;
  double noise = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  // Empty unless T < 10 N.
  std::string warning() const;
};

struct SyntheticData {
  SeriesPanel panel;
  Tensor adjacency;  // N x N, {0,1}, symmetric, zero diagonal
  Tensor weights;    // transition matrix after rescaling
};

inline constexpr double kSelfWeight = 0.5;
inline constexpr double kSpectralRadius = 0.9;
inline constexpr std::size_t kBurnIn = 100;

// Symmetric random graph, signed couplings on its edges plus self-weights,
// rescaled to the target spectral radius, simulated as a VAR(1).
SyntheticData synth_var(const SyntheticSpec& spec);
void write_synthetic(const SyntheticData& data, const SyntheticSpec& spec,
                     const std::filesystem::path& dir);

// x' = x + rho * std_i * eps with one noise stream per series name.
SeriesPanel inject_noise(const SeriesPanel& panel, double rho, std::uint64_t seed);

Tensor sector_partition_graph(const std::vector<std::string>& labels);

}  // namespace stoic::data
