#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stoic/data.hpp"
#include "stoic/model.hpp"

namespace stoic {

enum class RefreshPolicy { kEpoch, kBatch };

// Every key has a default; a config file only lists what it changes.
struct RunConfig {
  // Data: a CSV path, or a synthetic panel when empty.
  std::string data;
  data::SyntheticSpec synth;

  std::size_t window = 10;
  std::size_t horizon = 1;
  std::size_t stride = 1;
  double train_fraction = 0.7;
  double val_fraction = 0.1;

  std::size_t hidden = 60;
  std::size_t refs = 30;
  double tau = 0.5;
  bool hard_graph = false;
  std::size_t eval_samples = 10;
  std::size_t val_samples = 1;
  double beta_z = 1e-3;
  double beta_g = 1e-4;
  double prior_p = 0.1;
  Ablation ablation = Ablation::kFull;

  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t max_epochs = 500;
  std::size_t patience = 200;
  RefreshPolicy refresh = RefreshPolicy::kEpoch;
  std::uint64_t seed = 1;

  void validate() const;
  ModelConfig model(std::size_t series) const;

  // Canonical key=value lines in a fixed order; parsing them back reproduces the config.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  void set(const std::string& key, const std::string& value);
};

// `key = value` lines, '#' starts a comment. Unknown keys throw ConfigError
// naming the line.
RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace stoic
