#include "stoic/model.hpp"

#include <stdexcept>

#include "stoic/errors.hpp"

namespace stoic {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoGraph: return "no-graph";
    case Ablation::kNoRefCorr: return "no-refcorr";
    case Ablation::kNoWtAgg: return "no-wtagg";
  }
  return "full";
}

Ablation parse_ablation(const std::string& text) {
  for (Ablation a : {Ablation::kFull, Ablation::kNoGraph, Ablation::kNoRefCorr, Ablation::kNoWtAgg}) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown ablation '" + text +
                    "' (expected full, no-graph, no-refcorr or no-wtagg)");
}

void ModelConfig::validate() const {
  encoder().validate();
  if (series < 1) throw ConfigError("model needs at least one series");
  if (uses_graph() && series < 2) throw ConfigError("the graph path needs at least two series");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("gumbel temperature must be > 0");
  if (!(prior_p > 0.0 && prior_p < 1.0)) throw ConfigError("edge prior must lie in (0, 1)");
  if (!(beta_z >= 0.0) || !(beta_g >= 0.0)) throw ConfigError("KL weights must be >= 0");
}

StoicModel::StoicModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), store_(seed) {
  config_.validate();
  const auto enc_cfg = config_.encoder();
  const std::size_t h = config_.hidden;
  enc::add_pte(store_, enc_cfg);
  if (config_.uses_refs()) enc::add_rcn(store_, enc_cfg);
  if (config_.uses_graph()) {
    graph::add_ggm(store_, h);
    graph::add_rgne(store_, h);
  }
  dec::add_global(store_, h);
  if (config_.ablation != Ablation::kNoWtAgg) dec::add_weighted_aggregation(store_, h, components());
  dec::add_decoder(store_, config_.decoder_input(), h, config_.horizon);
}

std::vector<std::string> StoicModel::components() const {
  if (config_.uses_refs()) return {"u", "z", "g"};
  return {"u", "g"};
}

ModelNoise StoicModel::draw_noise(std::size_t windows, RngStream& rng) const {
  ModelNoise noise;
  noise.latent = enc::draw_latent_noise(windows * config_.series, config_.hidden, rng);
  if (config_.uses_graph()) noise.edge = graph::draw_edge_noise(windows, config_.series, rng);
  return noise;
}

ForwardPass StoicModel::forward(ad::Tape& tape, const Tensor& inputs, const ReferenceSet& refs,
                                const ModelNoise& noise) {
  const std::size_t n = config_.series;
  if (inputs.rows() % n != 0) throw ShapeError("forward: input rows are not a multiple of N");
  const auto enc_cfg = config_.encoder();
  ForwardPass p;
  p.latents = enc::pte_encode(tape, store_, enc_cfg, inputs);
  p.sampled = enc::reparam_sample(p.latents, noise.latent);

  p.u = p.sampled;
  if (config_.uses_graph()) {
    p.logits = graph::edge_logits(tape, store_, p.latents, n);
    p.graph = graph::gumbel_sample(p.logits, noise.edge, config_.tau, config_.hard_graph, n);
    p.u = graph::rgne_refine(tape, store_, p.graph.adjacency, p.sampled, n);
  }
  if (config_.uses_refs()) p.z = enc::rcn_encode(tape, store_, enc_cfg, p.latents.mu, refs).z;
  p.g = dec::global_embedding(tape, store_, p.u, n);
  const ad::Var g_rows = dec::broadcast_windows(p.g, n);

  if (config_.ablation == Ablation::kNoWtAgg) {
    p.k = dec::concat_aggregate(p.u, p.z, g_rows);
  } else {
    std::vector<dec::Component> parts{{"u", p.u}};
    if (config_.uses_refs()) parts.push_back({"z", p.z});
    parts.push_back({"g", g_rows});
    const auto agg = dec::weighted_aggregate(tape, store_, parts);
    p.k = agg.k;
    p.weights = agg.weights;
  }
  p.out = dec::decode(tape, store_, p.k, config_.horizon);
  return p;
}

dec::LossBreakdown StoicModel::loss(const ForwardPass& pass, const Tensor& targets) const {
  const ad::Var nll = dec::gaussian_nll(pass.out.mu, pass.out.sigma, targets);
  // Per-series KL averaged over all (window, series) rows.
  const ad::Var kl_z = ad::mean(enc::kl_gaussian_rows(pass.latents));
  ad::Var kl_g;
  if (config_.uses_graph()) kl_g = graph::graph_kl(pass.logits, config_.prior_p);
  return dec::elbo_loss(nll, kl_z, kl_g, config_.beta_z, config_.beta_g);
}

ForecastDistribution StoicModel::predict(const Tensor& inputs, const ReferenceSet& refs,
                                         std::size_t samples, RngStream& rng) {
  if (samples < 1) throw ConfigError("predictive sample count must be >= 1");
  const std::size_t windows = inputs.rows() / config_.series;
  std::vector<ForecastDistribution> draws;
  draws.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    ad::Tape tape;
    const auto pass = forward(tape, inputs, refs, draw_noise(windows, rng));
    draws.push_back({pass.out.mu.value(), pass.out.sigma.value()});
  }
  return dec::mixture_moments(draws);
}

std::vector<Tensor> StoicModel::sample_graphs(const Tensor& inputs,
                                              const std::vector<std::size_t>& windows,
                                              RngStream& rng) {
  if (!config_.uses_graph()) throw std::logic_error("sample_graphs: graph path is disabled");
  const std::size_t n = config_.series;
  std::vector<std::size_t> rows;
  rows.reserve(windows.size() * n);
  for (std::size_t w : windows) {
    if ((w + 1) * n > inputs.rows()) throw std::out_of_range("sample_graphs: window index");
    for (std::size_t i = 0; i < n; ++i) rows.push_back(w * n + i);
  }
  Tensor picked = Tensor::matrix(rows.size(), inputs.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < inputs.cols(); ++c) picked(r, c) = inputs(rows[r], c);

  ad::Tape tape;
  const auto latents = enc::pte_encode(tape, store_, config_.encoder(), picked);
  const ad::Var logits = graph::edge_logits(tape, store_, latents, n);
  const Tensor noise = graph::draw_edge_noise(windows.size(), n, rng);
  const auto sampled = graph::gumbel_sample(logits, noise, config_.tau, true, n);
  const Tensor& pairs = sampled.pairs.value();
  std::vector<Tensor> out;
  out.reserve(windows.size());
  for (std::size_t b = 0; b < windows.size(); ++b) {
    out.push_back(graph::pairs_to_matrix(
        std::span<const double>(pairs.data() + b * pairs.cols(), pairs.cols()), n));
  }
  return out;
}

void StoicModel::refresh(ReferenceSet& refs) {
  if (config_.uses_refs()) enc::refresh(refs, store_, config_.encoder());
}

}  // namespace stoic
