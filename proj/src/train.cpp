#include "stoic/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "stoic/adam.hpp"
#include "stoic/errors.hpp"

namespace stoic {

namespace {

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& starts,
                                             std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < starts.size(); i += size) {
    out.emplace_back(starts.begin() + i, starts.begin() + std::min(starts.size(), i + size));
  }
  return out;
}

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Rows [b*N, (b+1)*N) of a stacked tensor.
Tensor block(const Tensor& t, std::size_t b, std::size_t n) {
  Tensor out = Tensor::matrix(n, t.cols());
  std::copy(t.data() + b * n * t.cols(), t.data() + (b + 1) * n * t.cols(), out.data());
  return out;
}

}  // namespace

data::SeriesPanel load_panel(const RunConfig& config) {
  if (!config.data.empty()) return data::load_csv(config.data);
  return data::synth_var(config.synth).panel;
}

PreparedData prepare(const RunConfig& config, const data::SeriesPanel& panel,
                     const data::NormStats* fixed) {
  PreparedData p;
  p.names = panel.names;
  p.raw = panel.values;
  p.starts = data::window_starts(panel.steps(), config.window, config.horizon, config.stride);
  p.split = data::split_windows(p.starts, config.train_fraction, config.val_fraction);
  if (fixed) {
    if (fixed->mean.size() != panel.series()) {
      throw DataError("data has " + std::to_string(panel.series()) + " series, the model expects " +
                      std::to_string(fixed->mean.size()));
    }
    p.norm = *fixed;
  } else {
    const std::size_t covered = p.split.train.back() + config.window + config.horizon;
    Tensor head = Tensor::matrix(covered, panel.series());
    std::copy(panel.values.data(), panel.values.data() + head.size(), head.data());
    p.norm = data::fit_norm(head);
  }
  p.normalized = data::apply_norm(panel.values, p.norm);
  return p;
}

std::vector<std::size_t> slice_starts(const PreparedData& prep, Slice slice) {
  switch (slice) {
    case Slice::kTrain: return prep.split.train;
    case Slice::kVal: return prep.split.val;
    case Slice::kTest: return prep.split.test;
    case Slice::kAll: return prep.starts;
  }
  return prep.split.test;
}

Slice parse_slice(const std::string& text) {
  if (text == "train") return Slice::kTrain;
  if (text == "val") return Slice::kVal;
  if (text == "test") return Slice::kTest;
  if (text == "all") return Slice::kAll;
  throw ConfigError("unknown split '" + text + "' (expected train, val, test or all)");
}

double validation_crps(StoicModel& model, const ReferenceSet& refs, const PreparedData& prep,
                       const std::vector<std::size_t>& starts, std::size_t samples,
                       std::size_t batch, RngStream& rng) {
  const auto& cfg = model.config();
  double sum = 0.0;
  std::size_t cells = 0;
  for (const auto& chunk : chunks(starts, batch)) {
    const auto wb = data::gather_windows(prep.normalized, chunk, cfg.window, cfg.horizon);
    const auto dist = model.predict(wb.inputs, refs, samples, rng);
    sum += metrics::mean_crps(dist, wb.targets) * static_cast<double>(wb.targets.size());
    cells += wb.targets.size();
  }
  return sum / static_cast<double>(cells);
}

TrainResult train(const RunConfig& config, const data::SeriesPanel& panel,
                  const EpochCallback& on_epoch) {
  config.validate();
  const PreparedData prep = prepare(config, panel);
  const std::size_t n = panel.series();
  StoicModel model(config.model(n), config.seed);
  const RngStream root(config.seed, "train");
  RngStream order_rng = root.substream("order");
  RngStream noise_rng = root.substream("noise");
  RngStream refs_rng = root.substream("refs");

  const auto train_windows =
      data::gather_windows(prep.normalized, prep.split.train, config.window, config.horizon);
  ReferenceSet refs = enc::sample_reference_set(train_windows.inputs, config.refs, refs_rng);
  const AdamOptions adam{config.lr};

  TrainResult result;
  result.best = snapshot(config, prep.names, prep.norm, refs, model);
  result.best.best_val_crps = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<std::size_t> order = prep.split.train;

  std::size_t epoch = 0;
  while (epoch < config.max_epochs && !result.aborted) {
    ++epoch;
    model.refresh(refs);
    shuffle(order, order_rng);
    EpochLog log;
    log.epoch = epoch;
    std::size_t seen = 0;
    for (const auto& chunk : chunks(order, config.batch)) {
      if (config.refresh == RefreshPolicy::kBatch) model.refresh(refs);
      const auto wb = data::gather_windows(prep.normalized, chunk, config.window, config.horizon);
      try {
        ad::Tape tape;
        const auto pass = model.forward(tape, wb.inputs, refs, model.draw_noise(chunk.size(), noise_rng));
        const auto loss = model.loss(pass, wb.targets);
        tape.backward(loss.total_var);
        adam_step(model.params(), adam);
        const double w = static_cast<double>(chunk.size());
        log.total += w * loss.total;
        log.nll += w * loss.nll;
        log.kl_latent += w * loss.kl_latent;
        log.kl_graph += w * loss.kl_graph;
        seen += chunk.size();
      } catch (const NumericalError& e) {
        result.aborted = true;
        result.abort_message = "epoch " + std::to_string(epoch) + ": " + e.what();
        break;
      }
    }
    if (result.aborted) break;
    const double denom = static_cast<double>(seen);
    log.total /= denom;
    log.nll /= denom;
    log.kl_latent /= denom;
    log.kl_graph /= denom;

    model.refresh(refs);
    // Same draws every epoch so successive validation scores are comparable.
    RngStream val_rng(config.seed, "validation");
    log.val_crps = validation_crps(model, refs, prep, prep.split.val, config.val_samples,
                                   config.batch, val_rng);
    if (!std::isfinite(log.val_crps)) {
      result.aborted = true;
      result.abort_message = "epoch " + std::to_string(epoch) + ": validation CRPS is not finite";
      break;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.val_crps < result.best.best_val_crps) {
      result.best = snapshot(config, prep.names, prep.norm, refs, model);
      result.best.best_val_crps = log.val_crps;
      best_epoch = epoch;
    }
    if (epoch - best_epoch >= config.patience) break;
  }
  result.best.best_epoch = best_epoch;
  result.best.epochs = result.log.size();
  return result;
}

void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "epoch,train_total,train_nll,train_kl_z,train_kl_g,val_crps\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_real(e.total) << ',' << format_real(e.nll) << ','
        << format_real(e.kl_latent) << ',' << format_real(e.kl_graph) << ','
        << format_real(e.val_crps) << '\n';
  }
}

EvalOutput evaluate(const Checkpoint& ckpt, const data::SeriesPanel& panel,
                    const EvalOptions& options) {
  const RunConfig& cfg = ckpt.config;
  if (panel.series() != ckpt.series.size()) {
    throw DataError("data has " + std::to_string(panel.series()) + " series, the checkpoint expects " +
                    std::to_string(ckpt.series.size()));
  }
  if (!(options.rho >= 0.0)) throw ConfigError("noise level must be >= 0");
  const PreparedData prep = prepare(cfg, panel, &ckpt.norm);
  StoicModel model = restore_model(ckpt);
  const ReferenceSet refs = restore_refs(ckpt, model);
  const std::size_t n = panel.series();
  const std::uint64_t seed = options.seed ? options.seed : cfg.seed;
  const std::size_t samples = options.samples ? options.samples : cfg.eval_samples;

  Tensor inputs = prep.normalized;
  if (options.rho > 0.0) {
    inputs = data::inject_noise({prep.names, prep.normalized, ""}, options.rho, seed).values;
  }
  RngStream rng(seed, "evaluate");
  metrics::EvalAccumulator acc;
  EvalOutput out;
  out.starts = slice_starts(prep, options.slice);
  if (out.starts.empty()) throw DataError("evaluation slice has no windows");
  for (const auto& chunk : chunks(out.starts, cfg.batch)) {
    const auto wb = data::gather_windows(inputs, prep.normalized, chunk, cfg.window, cfg.horizon);
    const auto raw = data::gather_windows(prep.raw, chunk, cfg.window, cfg.horizon);
    const auto dist = model.predict(wb.inputs, refs, samples, rng);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      ForecastDistribution f{block(dist.mu, b, n), block(dist.sigma, b, n)};
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t h = 0; h < cfg.horizon; ++h) {
          f.mu(i, h) = f.mu(i, h) * ckpt.norm.std[i] + ckpt.norm.mean[i];
          f.sigma(i, h) *= ckpt.norm.std[i];
        }
      }
      acc.add(f, block(raw.targets, b, n));
      out.forecasts.push_back(std::move(f));
    }
  }
  out.report = acc.report();
  return out;
}

void write_metrics(const metrics::EvalReport& report, const std::string& label,
                   const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "model,rmse,crps,confidence_score,cells,windows\n";
  out << label << ',' << format_real(report.rmse) << ',' << format_real(report.crps) << ','
      << format_real(report.confidence_score) << ',' << report.cells << ',' << report.windows
      << '\n';
}

void write_reliability(const metrics::EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "level,coverage\n";
  for (const auto& p : report.reliability) {
    out << format_real(p.level) << ',' << format_real(p.coverage) << '\n';
  }
}

}  // namespace stoic
