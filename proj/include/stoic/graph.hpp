#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stoic/encoders.hpp"

// Graph generation (pairwise edge logits), relaxed Bernoulli sampling,
// graph-refined embeddings and posterior analysis. Batched tensors stack B
// windows of N series: node-level tensors are [B*N x d], pair-level tensors are
// [B x P] with P = N(N-1)/2 unordered pairs in (0,1), (0,2), ..., (N-2,N-1) order.
namespace stoic::graph {

using ad::Tape;
using ad::Var;

std::size_t pair_count(std::size_t n);
std::vector<std::pair<std::size_t, std::size_t>> unordered_pairs(std::size_t n);
// Index of pair {i, j} (i != j) in unordered_pairs(n).
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n);

// Expands one row of pair values into a symmetric N x N matrix with `diagonal`
// on the diagonal.
Tensor pairs_to_matrix(std::span<const double> pairs, std::size_t n, double diagonal = 0.0);
std::vector<double> upper_triangle(const Tensor& matrix);

// Groups "nn_g1" (4H -> H) and "nn_g2" (H -> 1).
void add_ggm(ParamStore& store, std::size_t hidden);
// Symmetrized logits (s_ij + s_ji) / 2 with s_ij = NN_G2(relu(NN_G1(f_ij))) and
// f_ij = [mu_i, mu_j, sigma_i, sigma_j]. Returns [B x P].
Var edge_logits(Tape& tape, ParamStore& store, const enc::LatentBatch& latents, std::size_t n);

// ln u - ln(1 - u) for every entry of a tensor of uniforms in (0, 1).
Tensor logistic_from_uniform(const Tensor& u);
Tensor draw_edge_noise(std::size_t batches, std::size_t n, RngStream& rng);

struct SampledGraph {
  Var pairs;      // [B x P] edge weights (hard or relaxed in the forward value)
  Var adjacency;  // [B*N x N], symmetric blocks with zero diagonal
  double tau = 0.5;
  bool hard = false;
};

// a_ij = sigmoid((logit_ij + noise_ij) / tau); with `hard`, the forward value
// is 1{a_ij > 0.5} and gradients follow the relaxed value.
SampledGraph gumbel_sample(Var logits, const Tensor& noise, double tau, bool hard, std::size_t n);
// Scatters [B x P] pair weights into [B*N x N] adjacency blocks.
Var pairs_to_adjacency(Var pairs, std::size_t n);

struct GraphPosterior {
  Tensor edgeprob;  // N x N
  std::size_t samples = 0;
};

// Mean of the 0.5-thresholded sample adjacencies (each N x N).
GraphPosterior edge_probability(const std::vector<Tensor>& samples);

// Groups "rgne" (two GCN layers and the gating GRU).
void add_rgne(ParamStore& store, std::size_t hidden);
Var rgne_refine(Tape& tape, ParamStore& store, Var adjacency, Var sampled, std::size_t n);

// Mean over windows of sum over pairs of KL(Bernoulli(sigmoid(l)) || Bernoulli(p)).
Var graph_kl(Var logits, double prior_p);
double graph_kl_value(std::span<const double> logits, double prior_p);

struct Correlation {
  double value = 0.0;
  bool degenerate = false;  // one of the vectors was constant; value forced to 0
};

Correlation graph_correlation(const GraphPosterior& posterior, const Tensor& reference);

struct ConfidentEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double probability = 0.0;
};

// Pairs with edgeprob strictly above `threshold`, i < j, highest first.
std::vector<ConfidentEdge> confident_edges(const GraphPosterior& posterior,
                                           double threshold = 0.8);

// True when every N x N block of `adjacency` is symmetric with zero diagonal.
bool is_symmetric_hollow(const Tensor& adjacency, std::size_t n);

}  // namespace stoic::graph
