#include "stoic/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "stoic/adam.hpp"
#include "stoic/errors.hpp"

namespace stoic {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& starts,
                                             std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < starts.size(); i += size) {
    out.emplace_back(starts.begin() + i, starts.begin() + std::min(starts.size(), i + size));
  }
  return out;
}

Tensor predict_all(PointForecaster& f, const Tensor& values, const std::vector<std::size_t>& starts,
                   std::size_t window, std::size_t horizon, std::size_t batch) {
  std::vector<double> out;
  for (const auto& chunk : chunks(starts, batch)) {
    const auto wb = data::gather_windows(values, chunk, window, horizon);
    const Tensor p = f.predict(wb.inputs);
    out.insert(out.end(), p.data(), p.data() + p.size());
  }
  const std::size_t rows = out.size() / horizon;
  return Tensor({rows, horizon}, std::move(out));
}

double mse(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

ForecastDistribution ensemble_moments(const std::vector<Tensor>& member_means) {
  if (member_means.size() < 2) {
    throw ConfigError("an ensemble needs at least 2 members for a spread");
  }
  const Tensor& first = member_means.front();
  for (const auto& m : member_means) {
    if (!m.same_shape(first)) throw ShapeError("ensemble_moments: member shapes differ");
  }
  const double k = static_cast<double>(member_means.size());
  ForecastDistribution d{Tensor(first.shape()), Tensor(first.shape())};
  for (std::size_t c = 0; c < first.size(); ++c) {
    double m = 0.0;
    for (const auto& t : member_means) m += t.data()[c];
    m /= k;
    double v = 0.0;
    for (const auto& t : member_means) v += (t.data()[c] - m) * (t.data()[c] - m);
    d.mu.data()[c] = m;
    d.sigma.data()[c] = std::max(std::sqrt(v / k), kEnsembleSigmaFloor);
  }
  return d;
}

PointForecaster::PointForecaster(std::size_t window, std::size_t hidden, std::size_t horizon,
                                 std::uint64_t seed)
    : window_(window), horizon_(horizon), store_(seed) {
  nn::add_bigru(store_, "base.gru", 1, hidden);
  nn::add_linear(store_, "base.head", 2 * hidden, horizon);
}

Tensor PointForecaster::predict(const Tensor& inputs) {
  ad::Tape tape;
  const auto h = nn::bigru_encode(tape, store_, "base.gru", inputs);
  return nn::linear(tape, store_, "base.head", h).value();
}

double PointForecaster::train_step(const Tensor& inputs, const Tensor& targets,
                                   const AdamOptions& adam) {
  if (inputs.cols() != window_ || targets.cols() != horizon_) {
    throw ShapeError("PointForecaster: batch does not match window or horizon");
  }
  ad::Tape tape;
  const auto h = nn::bigru_encode(tape, store_, "base.gru", inputs);
  const auto pred = nn::linear(tape, store_, "base.head", h);
  const auto loss = ad::mean(ad::square(pred - tape.constant(targets)));
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericalError("baseline loss is not finite");
  tape.backward(loss);
  adam_step(store_, adam);
  return value;
}

BaselineResult ensemble_baseline(const RunConfig& config, const data::SeriesPanel& panel,
                                 std::size_t k, Slice slice) {
  if (k < 2) throw ConfigError("baseline needs k >= 2 members");
  config.validate();
  const PreparedData prep = prepare(config, panel);
  const std::size_t n = panel.series();
  const auto eval_starts = slice_starts(prep, slice);
  if (eval_starts.empty()) throw DataError("evaluation slice has no windows");
  const auto val_targets =
      data::gather_windows(prep.normalized, prep.split.val, config.window, config.horizon).targets;
  const AdamOptions adam{config.lr};

  BaselineResult result;
  std::vector<Tensor> member_preds;
  for (std::size_t m = 1; m <= k; ++m) {
    const std::uint64_t seed = config.seed + m;
    PointForecaster f(config.window, config.hidden, config.horizon, seed);
    RngStream order_rng(seed, "baseline-order");
    std::vector<std::size_t> order = prep.split.train;
    ParamStore best = f.params();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0, epoch = 0;
    while (epoch < config.max_epochs) {
      ++epoch;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      for (const auto& chunk : chunks(order, config.batch)) {
        const auto wb = data::gather_windows(prep.normalized, chunk, config.window, config.horizon);
        f.train_step(wb.inputs, wb.targets, adam);
      }
      const double val = mse(predict_all(f, prep.normalized, prep.split.val, config.window,
                                         config.horizon, config.batch),
                             val_targets);
      if (!std::isfinite(val)) throw NumericalError("baseline validation error is not finite");
      if (val < best_val) {
        best_val = val;
        best_epoch = epoch;
        best = f.params();
      }
      if (epoch - best_epoch >= config.patience) break;
    }
    f.params() = best;
    result.member_epochs.push_back(epoch);
    member_preds.push_back(
        predict_all(f, prep.normalized, eval_starts, config.window, config.horizon, config.batch));
  }

  const ForecastDistribution all = ensemble_moments(member_preds);
  const auto raw = data::gather_windows(prep.raw, eval_starts, config.window, config.horizon);
  metrics::EvalAccumulator acc;
  result.min_sigma = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < eval_starts.size(); ++b) {
    ForecastDistribution f{Tensor::matrix(n, config.horizon), Tensor::matrix(n, config.horizon)};
    Tensor y = Tensor::matrix(n, config.horizon);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t h = 0; h < config.horizon; ++h) {
        const std::size_t r = b * n + i;
        f.mu(i, h) = all.mu(r, h) * prep.norm.std[i] + prep.norm.mean[i];
        f.sigma(i, h) = all.sigma(r, h) * prep.norm.std[i];
        y(i, h) = raw.targets(r, h);
        result.min_sigma = std::min(result.min_sigma, f.sigma(i, h));
      }
    }
    acc.add(f, y);
  }
  result.report = acc.report();
  return result;
}

std::vector<RobustnessRow> robustness_experiment(const Checkpoint& ckpt,
                                                 const data::SeriesPanel& panel,
                                                 const std::vector<double>& rhos,
                                                 const EvalOptions& options) {
  if (rhos.empty()) throw ConfigError("robustness needs at least one noise level");
  if (rhos.front() != 0.0) throw ConfigError("the first noise level must be 0 (the baseline)");
  std::vector<RobustnessRow> rows;
  double clean = 0.0;
  for (double rho : rhos) {
    EvalOptions o = options;
    o.rho = rho;
    const double crps = evaluate(ckpt, panel, o).report.crps;
    if (rows.empty()) clean = crps;
    rows.push_back({rho, crps, metrics::crps_increase_percent(clean, crps)});
  }
  return rows;
}

void write_robustness(const std::vector<RobustnessRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "rho,crps,pct_increase\n";
  for (const auto& r : rows) {
    out << format_real(r.rho) << ',' << format_real(r.crps) << ',' << format_real(r.pct_increase)
        << '\n';
  }
}

GraphRecovery graph_recovery_experiment(const Checkpoint& ckpt, const data::SeriesPanel& panel,
                                        const Tensor* reference, std::size_t samples,
                                        double threshold, Slice slice) {
  if (samples < 1) throw ConfigError("graph recovery needs at least one sample");
  const std::size_t n = ckpt.series.size();
  if (panel.series() != n) {
    throw DataError("data has " + std::to_string(panel.series()) + " series, the checkpoint expects " +
                    std::to_string(n));
  }
  if (reference && (reference->rows() != n || reference->cols() != n)) {
    throw DataError("reference adjacency is " + std::to_string(reference->rows()) + "x" +
                    std::to_string(reference->cols()) + ", expected " + std::to_string(n) + "x" +
                    std::to_string(n));
  }
  const RunConfig& cfg = ckpt.config;
  const PreparedData prep = prepare(cfg, panel, &ckpt.norm);
  StoicModel model = restore_model(ckpt);
  if (!cfg.model(n).uses_graph()) throw ConfigError("this checkpoint was trained without a graph");
  const auto starts = slice_starts(prep, slice);
  if (starts.empty()) throw DataError("graph recovery slice has no windows");

  // Only the windows actually used are encoded.
  std::vector<std::size_t> used(starts.begin(), starts.begin() + std::min(samples, starts.size()));
  const auto wb = data::gather_windows(prep.normalized, used, cfg.window, cfg.horizon);
  std::vector<std::size_t> index(samples);
  for (std::size_t s = 0; s < samples; ++s) index[s] = s % used.size();

  RngStream rng(cfg.seed, "graph-recovery");
  GraphRecovery out;
  out.posterior = graph::edge_probability(model.sample_graphs(wb.inputs, index, rng));
  if (reference) out.correlation = graph::graph_correlation(out.posterior, *reference);
  out.edges = graph::confident_edges(out.posterior, threshold);
  return out;
}

void write_confident_edges(const std::vector<graph::ConfidentEdge>& edges,
                           const std::vector<std::string>& names,
                           const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "i,j,name_i,name_j,prob\n";
  for (const auto& e : edges) {
    out << e.i << ',' << e.j << ',' << names.at(e.i) << ',' << names.at(e.j) << ','
        << format_real(e.probability) << '\n';
  }
}

}  // namespace stoic
