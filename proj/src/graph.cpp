#include "stoic/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stoic/errors.hpp"

namespace stoic::graph {

std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

std::vector<std::pair<std::size_t, std::size_t>> unordered_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  if (i == j || i >= n || j >= n) throw std::out_of_range("pair_index: invalid pair");
  if (i > j) std::swap(i, j);
  // pairs before row i: sum_{r<i} (n - 1 - r)
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

Tensor pairs_to_matrix(std::span<const double> pairs, std::size_t n, double diagonal) {
  if (pairs.size() != pair_count(n)) throw ShapeError("pairs_to_matrix: wrong pair count");
  Tensor m = Tensor::matrix(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = diagonal;
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      m(i, j) = pairs[k];
      m(j, i) = pairs[k];
    }
  }
  return m;
}

std::vector<double> upper_triangle(const Tensor& matrix) {
  const std::size_t n = matrix.rows();
  if (matrix.cols() != n) throw ShapeError("upper_triangle: matrix is not square");
  std::vector<double> out;
  out.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(matrix(i, j));
  }
  return out;
}

void add_ggm(ParamStore& store, std::size_t hidden) {
  nn::add_linear(store, "nn_g1", 4 * hidden, hidden);
  nn::add_linear(store, "nn_g2", hidden, 1);
}

Var edge_logits(Tape& tape, ParamStore& store, const enc::LatentBatch& latents, std::size_t n) {
  if (n < 2) throw std::invalid_argument("edge_logits: need at least 2 series, got " + std::to_string(n));
  const std::size_t rows = latents.mu.rows();
  if (rows % n != 0) throw ShapeError("edge_logits: latent rows not a multiple of N");
  const std::size_t h = latents.mu.cols();
  const std::size_t batches = rows / n;
  const std::size_t p = pair_count(n);

  // NN_G1 acts on [mu_i, mu_j, sigma_i, sigma_j]; its weight splits into a
  // block applied to node i and one applied to node j, so the first layer is
  // evaluated per node and then gathered per ordered pair.
  Var w = tape.param(store, "nn_g1.W");
  if (w.cols() != 4 * h) throw ShapeError("edge_logits: nn_g1 width does not match latents");
  Var w_src = ad::concat_cols({ad::slice_cols(w, 0, h), ad::slice_cols(w, 2 * h, h)});
  Var w_dst = ad::concat_cols({ad::slice_cols(w, h, h), ad::slice_cols(w, 3 * h, h)});
  Var sigma = ad::exp(ad::scale(latents.logvar, 0.5));
  Var node = ad::concat_cols({latents.mu, sigma});
  Var from_src = ad::matmul_nt(node, w_src);
  Var from_dst = ad::matmul_nt(node, w_dst);

  // Ordered pairs: (i, j) at 2k and (j, i) at 2k + 1 for unordered pair k.
  std::vector<std::size_t> src, dst;
  src.reserve(2 * batches * p);
  dst.reserve(2 * batches * p);
  const auto pairs = unordered_pairs(n);
  for (std::size_t b = 0; b < batches; ++b) {
    for (const auto& [i, j] : pairs) {
      src.push_back(b * n + i);
      dst.push_back(b * n + j);
      src.push_back(b * n + j);
      dst.push_back(b * n + i);
    }
  }
  Var pre = ad::add_row(ad::gather_rows(from_src, std::move(src)) +
                            ad::gather_rows(from_dst, std::move(dst)),
                        tape.param(store, "nn_g1.b"));
  Var s = nn::linear(tape, store, "nn_g2", ad::relu(pre));  // [B*2P x 1]
  Var both = ad::reshape(s, {batches * p, 2});
  return ad::reshape(ad::scale(ad::row_sum(both), 0.5), {batches, p});
}

Tensor logistic_from_uniform(const Tensor& u) {
  Tensor out(u.shape(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] > 0.0 && u[k] < 1.0)) {
      throw std::invalid_argument("logistic_from_uniform: uniform draw outside (0, 1)");
    }
    out[k] = std::log(u[k]) - std::log1p(-u[k]);
  }
  return out;
}

Tensor draw_edge_noise(std::size_t batches, std::size_t n, RngStream& rng) {
  return rng.logistic_tensor(batches, pair_count(n));
}

Var pairs_to_adjacency(Var pairs, std::size_t n) {
  const std::size_t p = pair_count(n);
  if (pairs.cols() != p) throw ShapeError("pairs_to_adjacency: pair count does not match N");
  const std::size_t batches = pairs.rows();
  std::vector<long> index(batches * n * n);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        index[(b * n + i) * n + j] =
            i == j ? -1 : static_cast<long>(b * p + pair_index(i, j, n));
      }
    }
  }
  return ad::gather_elems(pairs, std::move(index), {batches * n, n});
}

bool is_symmetric_hollow(const Tensor& adjacency, std::size_t n) {
  if (adjacency.cols() != n || adjacency.rows() % n != 0) return false;
  for (std::size_t b = 0; b < adjacency.rows() / n; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency(b * n + i, i) != 0.0) return false;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (adjacency(b * n + i, j) != adjacency(b * n + j, i)) return false;
      }
    }
  }
  return true;
}

SampledGraph gumbel_sample(Var logits, const Tensor& noise, double tau, bool hard, std::size_t n) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sample: temperature must be > 0");
  if (noise.rows() != logits.rows() || noise.cols() != logits.cols()) {
    throw ShapeError("gumbel_sample: noise " + noise.shape_string() + " vs logits " +
                     logits.value().shape_string());
  }
  Tape& tape = *logits.tape();
  Var a = ad::sigmoid(ad::scale(logits + tape.constant(noise), 1.0 / tau));
  if (hard) a = ad::straight_through(a, 0.5);
  SampledGraph g{a, pairs_to_adjacency(a, n), tau, hard};
  if (tape.nan_check() && !is_symmetric_hollow(g.adjacency.value(), n)) {
    throw NumericalError("gumbel_sample: adjacency lost symmetry or zero diagonal");
  }
  return g;
}

GraphPosterior edge_probability(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw std::invalid_argument("edge_probability: no samples");
  const std::size_t n = samples.front().rows();
  GraphPosterior post{Tensor::matrix(n, n), samples.size()};
  for (const auto& s : samples) {
    if (s.rows() != n || s.cols() != n) {
      throw ShapeError("edge_probability: samples have mixed sizes");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && s(i, j) > 0.5) post.edgeprob(i, j) += 1.0;
      }
    }
  }
  for (auto& v : post.edgeprob.values()) v /= static_cast<double>(samples.size());
  return post;
}

void add_rgne(ParamStore& store, std::size_t hidden) {
  nn::add_gcn(store, "rgne.gcn1", hidden, hidden);
  nn::add_gcn(store, "rgne.gcn2", hidden, hidden);
  nn::add_gru(store, "rgne.gru", hidden, hidden);
}

Var rgne_refine(Tape& tape, ParamStore& store, Var adjacency, Var sampled, std::size_t n) {
  if (adjacency.cols() != n || adjacency.rows() != sampled.rows()) {
    throw ShapeError("rgne_refine: adjacency " + adjacency.value().shape_string() +
                     " vs embeddings " + sampled.value().shape_string());
  }
  Var norm = ad::gcn_normalize(adjacency, n);
  Var x = nn::gcn_propagate(sampled, norm, tape.param(store, "rgne.gcn1.W"),
                            nn::Activation::kRelu, n);
  x = nn::gcn_propagate(x, norm, tape.param(store, "rgne.gcn2.W"), nn::Activation::kIdentity, n);
  return nn::gru_cell(tape, store, "rgne.gru", x, sampled);
}

namespace {

void check_prior(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("graph_kl: prior must lie in (0, 1), got " + std::to_string(p));
  }
}

}  // namespace

Var graph_kl(Var logits, double prior_p) {
  check_prior(prior_p);
  // theta (log theta - log p) + (1 - theta)(log(1 - theta) - log(1 - p)),
  // with log theta = log_sigmoid(l) and log(1 - theta) = log_sigmoid(-l).
  Var theta = ad::sigmoid(logits);
  Var on = theta * ad::add_scalar(ad::log_sigmoid(logits), -std::log(prior_p));
  Var off = ad::add_scalar(-theta, 1.0) *
            ad::add_scalar(ad::log_sigmoid(-logits), -std::log1p(-prior_p));
  return ad::scale(ad::sum(on + off), 1.0 / static_cast<double>(logits.rows()));
}

double graph_kl_value(std::span<const double> logits, double prior_p) {
  check_prior(prior_p);
  double total = 0.0;
  for (double l : logits) {
    const double theta = 1.0 / (1.0 + std::exp(-l));
    double term = 0.0;
    if (theta > 0.0) term += theta * std::log(theta / prior_p);
    if (theta < 1.0) term += (1.0 - theta) * std::log((1.0 - theta) / (1.0 - prior_p));
    total += term;
  }
  return total;
}

Correlation graph_correlation(const GraphPosterior& posterior, const Tensor& reference) {
  const std::size_t n = posterior.edgeprob.rows();
  if (reference.rows() != n || reference.cols() != n) {
    throw ShapeError("graph_correlation: reference " + reference.shape_string() +
                     " vs posterior " + posterior.edgeprob.shape_string());
  }
  if (n < 3) throw std::invalid_argument("graph_correlation: need N >= 3");
  const auto x = upper_triangle(posterior.edgeprob);
  const auto y = upper_triangle(reference);
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) return {0.0, true};
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

std::vector<ConfidentEdge> confident_edges(const GraphPosterior& posterior, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("confident_edges: threshold must lie in [0, 1]");
  }
  const std::size_t n = posterior.edgeprob.rows();
  std::vector<ConfidentEdge> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = posterior.edgeprob(i, j);
      if (p > threshold) out.push_back({i, j, p});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ConfidentEdge& a, const ConfidentEdge& b) {
                     return a.probability > b.probability;
                   });
  return out;
}

}  // namespace stoic::graph
