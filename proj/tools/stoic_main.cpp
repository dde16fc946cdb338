// Command-line front end: train, eval, synth, baseline, robustness, export-graph.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "stoic/errors.hpp"
#include "stoic/experiments.hpp"

namespace fs = std::filesystem;
using namespace stoic;

namespace {

[[noreturn]] void fail(ErrorCode code, const char* tag, const std::string& msg) {
  std::cerr << "error[" << tag << "] " << msg << '\n';
  std::exit(static_cast<int>(code));
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("--rho: '" + cell + "' is not a number");
    }
  }
  return out;
}

data::SeriesPanel panel_for(const Checkpoint& ckpt, const std::string& path) {
  if (!path.empty()) return data::load_csv(path);
  return load_panel(ckpt.config);
}

void print_report(const std::string& label, const metrics::EvalReport& r) {
  std::printf("%s: rmse=%.6g crps=%.6g confidence_score=%.4f windows=%zu\n", label.c_str(), r.rmse,
              r.crps, r.confidence_score, r.windows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic multivariate forecasting with a latent stochastic graph"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", ckpt_path, data_path, reference_path, rho_text = "0,0.05,0.1,0.2";
  std::string split = "test";
  std::size_t k = 10, samples = 100, eval_samples = 0;
  double threshold = 0.8;
  data::SyntheticSpec synth;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", config_path, "Config file (key = value)")->required();
  train_cmd->add_option("--out", out_dir, "Output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "CSV panel (default: the checkpoint's data)");
  eval_cmd->add_option("--split", split, "train, val, test or all");
  eval_cmd->add_option("--samples", eval_samples, "Predictive draws (default: from config)");
  eval_cmd->add_option("--out", out_dir, "Output directory");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic VAR panel with known graph");
  synth_cmd->add_option("--n", synth.n, "Series count");
  synth_cmd->add_option("--t", synth.t, "Time steps");
  synth_cmd->add_option("--density", synth.density, "Edge density in [0, 1]");
  synth_cmd->add_option("--coupling", synth.coupling, "Coupling scale");
  synth_cmd->add_option("--noise", synth.noise, "Innovation standard deviation");
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  synth_cmd->add_option("--out", out_dir, "Output directory");

  auto* base_cmd = app.add_subcommand("baseline", "Train and evaluate the ensemble baseline");
  base_cmd->add_option("--config", config_path, "Config file")->required();
  base_cmd->add_option("--k", k, "Ensemble members");
  base_cmd->add_option("--out", out_dir, "Output directory");

  auto* rob_cmd = app.add_subcommand("robustness", "CRPS under input noise");
  rob_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  rob_cmd->add_option("--data", data_path, "CSV panel (default: the checkpoint's data)");
  rob_cmd->add_option("--rho", rho_text, "Comma-separated noise levels, first must be 0");
  rob_cmd->add_option("--out", out_dir, "Output directory");

  auto* graph_cmd = app.add_subcommand("export-graph", "Edge probabilities and confident edges");
  graph_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  graph_cmd->add_option("--data", data_path, "CSV panel (default: the checkpoint's data)");
  graph_cmd->add_option("--reference", reference_path, "Reference adjacency CSV (N x N with header)");
  graph_cmd->add_option("--threshold", threshold, "Confident-edge threshold (strict)");
  graph_cmd->add_option("--samples", samples, "Hard graph samples");
  graph_cmd->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(ErrorCode::kConfig, "E_CONFIG", e.what());
  }

  try {
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    if (*train_cmd) {
      const RunConfig cfg = load_config(config_path);
      const auto panel = load_panel(cfg);
      const auto result = train(cfg, panel, [](const EpochLog& e) {
        std::printf("epoch %zu total=%.6g nll=%.6g kl_z=%.6g kl_g=%.6g val_crps=%.6g\n", e.epoch,
                    e.total, e.nll, e.kl_latent, e.kl_graph, e.val_crps);
      });
      save_checkpoint(result.best, out / "model.ckpt");
      write_train_log(result.log, out / "train_log.csv");
      if (result.aborted) {
        throw NumericalError(result.abort_message + " (best checkpoint so far saved)");
      }
      const auto report = evaluate(result.best, panel).report;
      write_metrics(report, to_string(cfg.ablation), out / "metrics.csv");
      write_reliability(report, out / "reliability.csv");
      print_report("test", report);
    } else if (*eval_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      EvalOptions opts;
      opts.slice = parse_slice(split);
      opts.samples = eval_samples;
      const auto report = evaluate(ckpt, panel_for(ckpt, data_path), opts).report;
      write_metrics(report, to_string(ckpt.config.ablation), out / "metrics.csv");
      write_reliability(report, out / "reliability.csv");
      print_report(split, report);
    } else if (*synth_cmd) {
      synth.validate();
      if (const auto w = synth.warning(); !w.empty()) std::cerr << "warning: " << w << '\n';
      data::write_synthetic(data::synth_var(synth), synth, out);
    } else if (*base_cmd) {
      const RunConfig cfg = load_config(config_path);
      const auto result = ensemble_baseline(cfg, load_panel(cfg), k);
      write_metrics(result.report, "ensemble", out / "metrics.csv");
      write_reliability(result.report, out / "reliability.csv");
      print_report("ensemble", result.report);
    } else if (*rob_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const auto rows = robustness_experiment(ckpt, panel_for(ckpt, data_path), parse_levels(rho_text));
      write_robustness(rows, out / "robustness.csv");
      for (const auto& r : rows) std::printf("rho=%g crps=%.6g increase=%.3f%%\n", r.rho, r.crps, r.pct_increase);
    } else if (*graph_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const auto panel = panel_for(ckpt, data_path);
      Tensor reference;
      if (!reference_path.empty()) reference = data::load_matrix_csv(reference_path);
      const auto rec = graph_recovery_experiment(ckpt, panel, reference_path.empty() ? nullptr : &reference,
                                                 samples, threshold);
      data::save_matrix_csv(rec.posterior.edgeprob, ckpt.series, out / "edgeprob.csv");
      write_confident_edges(rec.edges, ckpt.series, out / "confident_edges.csv");
      std::printf("confident edges: %zu\n", rec.edges.size());
      if (rec.correlation) {
        std::printf("graph correlation: %.6f%s\n", rec.correlation->value,
                    rec.correlation->degenerate ? " (degenerate: constant edge probabilities)" : "");
      }
    }
  } catch (const Error& e) {
    fail(e.code(), e.tag(), e.what());
  } catch (const fs::filesystem_error& e) {
    fail(ErrorCode::kData, "E_DATA", e.what());
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
