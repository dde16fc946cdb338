#include "stoic/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stoic/errors.hpp"

namespace stoic::dec {

void add_global(ParamStore& store, std::size_t hidden) {
  nn::add_linear(store, "global", hidden, hidden);
}

Var global_embedding(Tape& tape, ParamStore& store, Var u, std::size_t n) {
  if (n == 0 || u.rows() == 0) throw std::invalid_argument("global_embedding: no series");
  if (u.rows() % n != 0) throw ShapeError("global_embedding: rows not a multiple of N");
  return nn::linear(tape, store, "global", ad::segment_mean_rows(u, n));
}

Var broadcast_windows(Var g, std::size_t n) {
  std::vector<std::size_t> index(g.rows() * n);
  for (std::size_t r = 0; r < index.size(); ++r) index[r] = r / n;
  return ad::gather_rows(g, std::move(index));
}

void add_weighted_aggregation(ParamStore& store, std::size_t hidden,
                              const std::vector<std::string>& components) {
  for (const auto& c : components) {
    nn::add_linear(store, "agg." + c + ".proj", hidden, hidden, false);
    nn::add_linear(store, "agg." + c + ".score", hidden, 1, false);
  }
}

Aggregated weighted_aggregate(Tape& tape, ParamStore& store, const std::vector<Component>& parts) {
  if (parts.empty()) throw std::invalid_argument("weighted_aggregate: no components");
  const std::size_t rows = parts.front().value.rows();
  const std::size_t h = parts.front().value.cols();
  std::vector<Var> scores;
  for (const auto& c : parts) {
    if (c.value.rows() != rows || c.value.cols() != h) {
      throw ShapeError("weighted_aggregate: component '" + c.name + "' is " +
                       c.value.value().shape_string());
    }
    Var hidden = ad::tanh(nn::linear(tape, store, "agg." + c.name + ".proj", c.value));
    scores.push_back(nn::linear(tape, store, "agg." + c.name + ".score", hidden));
  }
  Var alpha = ad::softmax_rows(ad::concat_cols(scores));
  Var k = ad::mul_col(parts[0].value, ad::slice_cols(alpha, 0, 1));
  for (std::size_t c = 1; c < parts.size(); ++c) {
    k = k + ad::mul_col(parts[c].value, ad::slice_cols(alpha, c, 1));
  }
  return {k, alpha};
}

Var concat_aggregate(Var u, Var z, Var g) {
  if (u.rows() != z.rows() || u.rows() != g.rows() || u.cols() != z.cols() ||
      u.cols() != g.cols()) {
    throw ShapeError("concat_aggregate: component shapes differ");
  }
  return ad::concat_cols({u, z, g});
}

void add_decoder(ParamStore& store, std::size_t in, std::size_t hidden, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("add_decoder: horizon must be >= 1");
  nn::add_linear(store, "dec.trunk", in, hidden);
  nn::add_linear(store, "dec.mu", hidden, horizon);
  nn::add_linear(store, "dec.sigma", hidden, horizon);
}

Decoded decode(Tape& tape, ParamStore& store, Var k, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("decode: horizon must be >= 1");
  if (store.at("dec.mu.W").value.rows() != horizon) {
    throw ShapeError("decode: heads were built for a different horizon");
  }
  Var trunk = ad::relu(nn::linear(tape, store, "dec.trunk", k));
  Var mu = nn::linear(tape, store, "dec.mu", trunk);
  Var sigma = ad::add_scalar(ad::softplus(nn::linear(tape, store, "dec.sigma", trunk)), kSigmaFloor);
  return {mu, sigma};
}

Var gaussian_nll(Var mu, Var sigma, const Tensor& y) {
  if (mu.rows() != y.rows() || mu.cols() != y.cols() || sigma.rows() != y.rows() ||
      sigma.cols() != y.cols()) {
    throw ShapeError("gaussian_nll: shapes of mu, sigma and y differ");
  }
  for (double s : sigma.value().values()) {
    if (!(s > 0.0)) throw std::invalid_argument("gaussian_nll: sigma must be > 0");
  }
  Tape& tape = *mu.tape();
  Var diff = tape.constant(y) - mu;
  Var quad = ad::scale(ad::square(diff) * ad::exp(ad::scale(ad::log(sigma), -2.0)), 0.5);
  Var cell = ad::add_scalar(ad::log(sigma) + quad, 0.5 * std::log(2.0 * std::numbers::pi));
  return ad::mean(cell);
}

double compose_total(double nll, double kl_latent, double kl_graph, double beta_z,
                     double beta_g) {
  return (nll + beta_z * kl_latent) + beta_g * kl_graph;
}

LossBreakdown elbo_loss(Var nll, Var kl_latent, Var kl_graph, double beta_z, double beta_g) {
  LossBreakdown out;
  out.beta_z = beta_z;
  out.beta_g = beta_g;
  auto check = [](Var v, const char* name) {
    if (!std::isfinite(v.item())) {
      throw NumericalError(std::string("non-finite loss component '") + name + "'");
    }
    return v.item();
  };
  out.nll = check(nll, "nll");
  Var total = nll;
  if (kl_latent.valid()) {
    out.kl_latent = check(kl_latent, "kl_latent");
    total = total + ad::scale(kl_latent, beta_z);
  }
  if (kl_graph.valid()) {
    out.kl_graph = check(kl_graph, "kl_graph");
    total = total + ad::scale(kl_graph, beta_g);
  }
  out.total_var = total;
  out.total = total.item();
  if (!std::isfinite(out.total)) throw NumericalError("non-finite loss component 'total'");
  return out;
}

ForecastDistribution mixture_moments(const std::vector<ForecastDistribution>& samples) {
  if (samples.empty()) throw std::invalid_argument("mixture_moments: no samples");
  const auto& shape = samples.front().mu.shape();
  for (const auto& s : samples) {
    if (s.mu.shape() != shape || s.sigma.shape() != shape) {
      throw ShapeError("mixture_moments: sample shapes differ");
    }
  }
  if (samples.size() == 1) return samples.front();
  const double count = static_cast<double>(samples.size());
  ForecastDistribution out{Tensor(shape, 0.0), Tensor(shape, 0.0)};
  for (std::size_t c = 0; c < out.mu.size(); ++c) {
    double m = 0.0, second = 0.0;
    for (const auto& s : samples) {
      m += s.mu[c];
      second += s.sigma[c] * s.sigma[c] + s.mu[c] * s.mu[c];
    }
    m /= count;
    const double v = second / count - m * m;
    out.mu[c] = m;
    out.sigma[c] = std::sqrt(std::max(v, 1e-8));
  }
  return out;
}

}  // namespace stoic::dec
