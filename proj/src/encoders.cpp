#include "stoic/encoders.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stoic/errors.hpp"

namespace stoic {

void EncoderConfig::validate() const {
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (window < 2) throw ConfigError("window length must be >= 2, got " + std::to_string(window));
  if (refs < 1) throw ConfigError("reference count must be >= 1");
}

std::vector<double> LatentGaussian::sigma() const {
  std::vector<double> s(logvar.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(0.5 * logvar[i]);
  return s;
}

namespace enc {

namespace {

nn::MlpSpec square_mlp(std::size_t h) { return nn::MlpSpec{{h, h, h}}; }

}  // namespace

void add_pte(ParamStore& store, const EncoderConfig& cfg) {
  const std::size_t h = cfg.hidden;
  nn::add_bigru(store, "pte", 1, h);
  nn::add_linear(store, "nn_h.trunk", 2 * h, h);
  nn::add_linear(store, "nn_h.mean", h, h);
  nn::add_linear(store, "nn_h.logvar", h, h);
}

LatentBatch pte_encode(Tape& tape, ParamStore& store, const EncoderConfig& cfg,
                       const Tensor& windows) {
  if (windows.cols() < 2) {
    throw std::invalid_argument("pte_encode: window length must be >= 2, got " +
                                std::to_string(windows.cols()));
  }
  if (windows.cols() != cfg.window) {
    throw ShapeError("pte_encode: window length " + std::to_string(windows.cols()) +
                     ", configured " + std::to_string(cfg.window));
  }
  if (!windows.all_finite()) throw DataError("pte_encode: non-finite value in input window");
  Var h = nn::bigru_encode(tape, store, "pte", windows);
  Var trunk = ad::relu(nn::linear(tape, store, "nn_h.trunk", h));
  Var mu = nn::linear(tape, store, "nn_h.mean", trunk);
  Var logvar = ad::clamp(nn::linear(tape, store, "nn_h.logvar", trunk), kLogvarMin, kLogvarMax);
  return {mu, logvar};
}

std::vector<LatentGaussian> to_latents(const LatentBatch& batch) {
  const Tensor& mu = batch.mu.value();
  const Tensor& lv = batch.logvar.value();
  std::vector<LatentGaussian> out(mu.rows());
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    auto m = mu.row_span(r);
    auto l = lv.row_span(r);
    out[r].mu.assign(m.begin(), m.end());
    out[r].logvar.assign(l.begin(), l.end());
  }
  return out;
}

Var reparam_sample(const LatentBatch& latents, const Tensor& eps) {
  Tape& tape = *latents.mu.tape();
  if (eps.rows() != latents.mu.rows() || eps.cols() != latents.mu.cols()) {
    throw ShapeError("reparam_sample: noise " + eps.shape_string() + " vs latent " +
                     latents.mu.value().shape_string());
  }
  Var sigma = ad::exp(ad::scale(latents.logvar, 0.5));
  return latents.mu + sigma * tape.constant(eps);
}

Tensor draw_latent_noise(std::size_t rows, std::size_t hidden, RngStream& rng) {
  return rng.normal_tensor(rows, hidden);
}

Var kl_gaussian_rows(const LatentBatch& latents) {
  // 1/2 sum_d (mu^2 + exp(logvar) - logvar - 1)
  Var terms = ad::square(latents.mu) + ad::exp(latents.logvar) - latents.logvar;
  return ad::scale(ad::add_scalar(ad::row_sum(terms), -static_cast<double>(latents.mu.cols())), 0.5);
}

double kl_gaussian(const LatentGaussian& latent) {
  double s = 0.0;
  for (std::size_t d = 0; d < latent.mu.size(); ++d) {
    s += latent.mu[d] * latent.mu[d] + std::exp(latent.logvar[d]) - latent.logvar[d] - 1.0;
  }
  return 0.5 * s;
}

ReferenceSet sample_reference_set(const Tensor& candidates, std::size_t m, RngStream& rng) {
  if (candidates.rows() == 0 || m == 0) {
    throw std::invalid_argument("sample_reference_set: empty candidates or M = 0");
  }
  ReferenceSet refs;
  refs.windows = Tensor::matrix(m, candidates.cols());
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t r = rng.below(candidates.rows());
    for (std::size_t j = 0; j < candidates.cols(); ++j) refs.windows(k, j) = candidates(r, j);
  }
  refs.stale = true;
  return refs;
}

void refresh(ReferenceSet& refs, ParamStore& store, const EncoderConfig& cfg) {
  Tape tape;
  LatentBatch lat = pte_encode(tape, store, cfg, refs.windows);
  refs.encodings = lat.mu.value();
  refs.stale = false;
}

void add_rcn(ParamStore& store, const EncoderConfig& cfg) {
  const std::size_t h = cfg.hidden;
  nn::add_mlp(store, "nn_z1", square_mlp(h));
  nn::add_mlp(store, "nn_z2", square_mlp(h));
  nn::add_mlp(store, "rcn.residual", square_mlp(h));
}

RcnOutput rcn_encode(Tape& tape, ParamStore& store, const EncoderConfig& cfg, Var query_mu,
                     const ReferenceSet& refs) {
  if (refs.size() == 0) throw std::invalid_argument("rcn_encode: empty reference set");
  if (refs.stale) throw std::logic_error("rcn_encode: reference encodings are stale");
  const std::size_t h = cfg.hidden;
  if (refs.encodings.cols() != h || query_mu.cols() != h) {
    throw ShapeError("rcn_encode: embedding widths disagree with hidden size");
  }
  Var enc = tape.constant(refs.encodings);
  Var q = nn::mlp_forward(tape, store, "nn_z1", square_mlp(h), query_mu);
  Var k = nn::mlp_forward(tape, store, "nn_z2", square_mlp(h), enc);
  Var scores = ad::scale(ad::matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(h)));
  Var attention = ad::softmax_rows(scores);
  Var pooled = ad::matmul(attention, enc);
  Var z = pooled + nn::mlp_forward(tape, store, "rcn.residual", square_mlp(h), pooled);
  return {z, attention};
}

}  // namespace enc
}  // namespace stoic
