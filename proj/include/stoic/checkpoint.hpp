#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stoic/config.hpp"

namespace stoic {

inline constexpr const char* kCheckpointMagic = "STOIC-CKPT";
inline constexpr const char* kCheckpointVersion = "v1";

struct Checkpoint {
  RunConfig config;
  std::vector<std::string> series;
  data::NormStats norm;
  Tensor ref_windows;  // [M x L] reference windows, normalized units
  std::map<std::string, Tensor> params;
  double best_val_crps = 0.0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
};

Checkpoint snapshot(const RunConfig& config, const std::vector<std::string>& series,
                    const data::NormStats& norm, const ReferenceSet& refs,
                    const StoicModel& model);

// Text format: magic line, config block, state block, then one header line
// "name dims d1 d2" and one value line per tensor.
std::string serialize_checkpoint(const Checkpoint& ckpt);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::istream& in, const std::string& source);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the model, checking every stored tensor against the shapes the
// config implies. Throws DataError on a missing, extra or mis-shaped tensor.
StoicModel restore_model(const Checkpoint& ckpt);
// Reference set with encodings recomputed by `model`.
ReferenceSet restore_refs(const Checkpoint& ckpt, StoicModel& model);

}  // namespace stoic
