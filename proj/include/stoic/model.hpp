#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stoic/decoder.hpp"
#include "stoic/graph.hpp"

namespace stoic {

enum class Ablation {
  kFull,
  kNoGraph,     // no edge generator or graph refinement; U is the sampled latent
  kNoRefCorr,   // no reference correlation network; aggregation over {u, g}
  kNoWtAgg,     // concatenation (u, z, g) into a 3H decoder input
};

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& text);

struct ModelConfig {
  std::size_t series = 1;
  std::size_t window = 10;
  std::size_t horizon = 1;
  std::size_t hidden = 60;
  std::size_t refs = 30;
  double tau = 0.5;
  double prior_p = 0.1;
  double beta_z = 1e-3;
  double beta_g = 1e-4;
  bool hard_graph = false;
  Ablation ablation = Ablation::kFull;

  void validate() const;
  EncoderConfig encoder() const { return {hidden, window, refs}; }
  bool uses_graph() const noexcept { return ablation != Ablation::kNoGraph; }
  bool uses_refs() const noexcept { return ablation != Ablation::kNoRefCorr; }
  std::size_t decoder_input() const noexcept {
    return ablation == Ablation::kNoWtAgg ? 3 * hidden : hidden;
  }
};

// Random inputs of one forward pass. `edge` is empty when the graph path is off.
struct ModelNoise {
  Tensor latent;  // [B*N x H] standard normal
  Tensor edge;    // [B x P] standard logistic
};

struct ForwardPass {
  enc::LatentBatch latents;
  ad::Var sampled;  // reparameterized latents
  ad::Var logits;   // invalid without the graph path
  graph::SampledGraph graph;
  ad::Var u;
  ad::Var z;        // invalid without the reference network
  ad::Var g;        // [B x H]
  ad::Var k;
  ad::Var weights;  // aggregation weights; invalid for concatenation
  dec::Decoded out;
};

class StoicModel {
 public:
  StoicModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }

  ModelNoise draw_noise(std::size_t windows, RngStream& rng) const;
  // `inputs` is [B*N x L]; refs must be fresh when the reference network is on.
  ForwardPass forward(ad::Tape& tape, const Tensor& inputs, const ReferenceSet& refs,
                      const ModelNoise& noise);
  dec::LossBreakdown loss(const ForwardPass& pass, const Tensor& targets) const;

  // Moment-matched predictive over `samples` joint draws, normalized units.
  ForecastDistribution predict(const Tensor& inputs, const ReferenceSet& refs,
                               std::size_t samples, RngStream& rng);
  // One hard N x N graph per entry of `windows` (row block index into inputs).
  std::vector<Tensor> sample_graphs(const Tensor& inputs, const std::vector<std::size_t>& windows,
                                    RngStream& rng);

  void refresh(ReferenceSet& refs);

 private:
  std::vector<std::string> components() const;

  ModelConfig config_;
  ParamStore store_;
};

}  // namespace stoic
