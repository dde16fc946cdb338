#pragma once

#include <cstddef>
#include <vector>

#include "stoic/layers.hpp"
#include "stoic/rng.hpp"

namespace stoic {

struct EncoderConfig {
  std::size_t hidden = 60;  // GRU width per direction and latent dimension
  std::size_t window = 10;  // input length L
  std::size_t refs = 30;    // reference set size M

  void validate() const;
};

// Diagonal Gaussian over one series' embedding.
struct LatentGaussian {
  std::vector<double> mu;
  std::vector<double> logvar;

  std::vector<double> sigma() const;
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

// Reference windows for the correlation network, with their cached PTE means.
struct ReferenceSet {
  Tensor windows;    // [M x L]
  Tensor encodings;  // [M x hidden]
  bool stale = true;

  std::size_t size() const noexcept { return windows.rows(); }
};

namespace enc {

using ad::Tape;
using ad::Var;

// Row r of each tensor is the latent of one series (batches are stacked).
struct LatentBatch {
  Var mu;
  Var logvar;
};

// Probabilistic temporal encoder. Parameter groups: "pte" (bi-GRU) and
// "nn_h" (trunk plus mean and log-variance heads).
void add_pte(ParamStore& store, const EncoderConfig& cfg);
// `windows` is [rows x L] of normalized values, one series history per row.
LatentBatch pte_encode(Tape& tape, ParamStore& store, const EncoderConfig& cfg,
                       const Tensor& windows);
std::vector<LatentGaussian> to_latents(const LatentBatch& batch);

// z = mu + exp(logvar / 2) * eps, eps supplied by the caller so tests can freeze it.
Var reparam_sample(const LatentBatch& latents, const Tensor& eps);
Tensor draw_latent_noise(std::size_t rows, std::size_t hidden, RngStream& rng);

// Per-row KL(q || N(0, I)) as an [rows x 1] column.
Var kl_gaussian_rows(const LatentBatch& latents);
double kl_gaussian(const LatentGaussian& latent);

// Picks M rows of `candidates` ([rows x L]) uniformly with replacement.
ReferenceSet sample_reference_set(const Tensor& candidates, std::size_t m, RngStream& rng);
// Re-encodes the reference windows with the current PTE means (no gradient).
void refresh(ReferenceSet& refs, ParamStore& store, const EncoderConfig& cfg);

// Reference correlation network. Groups "nn_z1" (query map), "nn_z2" (key
// map) and "rcn" (residual MLP).
void add_rcn(ParamStore& store, const EncoderConfig& cfg);

struct RcnOutput {
  Var z;          // [rows x hidden]
  Var attention;  // [rows x M], each row a probability vector
};

RcnOutput rcn_encode(Tape& tape, ParamStore& store, const EncoderConfig& cfg, Var query_mu,
                     const ReferenceSet& refs);

}  // namespace enc
}  // namespace stoic
