#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stoic/layers.hpp"

namespace stoic {

// Per-series, per-step Gaussian forecast. Rows are series, columns horizon steps.
struct ForecastDistribution {
  Tensor mu;
  Tensor sigma;
};

inline constexpr double kSigmaFloor = 1e-4;

namespace dec {

using ad::Tape;
using ad::Var;

// Group "global": one linear map applied to the mean of each window's rows of U.
void add_global(ParamStore& store, std::size_t hidden);
// U is [B*N x H]; returns [B x H].
Var global_embedding(Tape& tape, ParamStore& store, Var u, std::size_t n);
// Repeats each window row of g for its N series: [B x H] -> [B*N x H].
Var broadcast_windows(Var g, std::size_t n);

struct Component {
  std::string name;  // parameter prefix agg.<name>
  Var value;         // [rows x H]
};

// Score nets agg.<name>.proj.W [H x H] and agg.<name>.score.W [1 x H], no biases.
void add_weighted_aggregation(ParamStore& store, std::size_t hidden,
                              const std::vector<std::string>& components);

struct Aggregated {
  Var k;        // [rows x H]
  Var weights;  // [rows x C], softmax over components
};

// e_c = w_c . tanh(W_c h_c); alpha = softmax(e); k = sum_c alpha_c h_c.
Aggregated weighted_aggregate(Tape& tape, ParamStore& store, const std::vector<Component>& parts);
Var concat_aggregate(Var u, Var z, Var g);

// Groups "dec": trunk (in -> H) with relu, then mean and scale heads (H -> horizon).
void add_decoder(ParamStore& store, std::size_t in, std::size_t hidden, std::size_t horizon);

struct Decoded {
  Var mu;     // [rows x horizon]
  Var sigma;  // softplus(.) + kSigmaFloor
};

Decoded decode(Tape& tape, ParamStore& store, Var k, std::size_t horizon);

// Mean over cells of 1/2 ln(2 pi sigma^2) + (y - mu)^2 / (2 sigma^2).
Var gaussian_nll(Var mu, Var sigma, const Tensor& y);

struct LossBreakdown {
  double nll = 0.0;
  double kl_latent = 0.0;
  double kl_graph = 0.0;
  double total = 0.0;
  double beta_z = 0.0;
  double beta_g = 0.0;
  Var total_var;
};

// (nll + beta_z * kl_latent) + beta_g * kl_graph, in that order.
double compose_total(double nll, double kl_latent, double kl_graph, double beta_z,
                     double beta_g);
// Either KL may be an invalid Var (term absent under an ablation) and then counts as 0.
LossBreakdown elbo_loss(Var nll, Var kl_latent, Var kl_graph, double beta_z, double beta_g);

// Moment-matches an equally weighted Gaussian mixture, cell by cell.
ForecastDistribution mixture_moments(const std::vector<ForecastDistribution>& samples);

}  // namespace dec
}  // namespace stoic
