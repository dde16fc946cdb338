#include "stoic/data.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stoic/errors.hpp"
#include "stoic/rng.hpp"

namespace stoic::data {

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

SeriesPanel parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  SeriesPanel panel;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw DataError(source + ": empty file");
  for (auto& name : split_cells(line)) panel.names.push_back(trim(name));
  const std::size_t n = panel.names.size();
  for (std::size_t c = 0; c < n; ++c) {
    if (panel.names[c].empty()) {
      throw DataError(source + ": row " + std::to_string(line_no) + ", column " +
                      std::to_string(c + 1) + ": empty series name");
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t d = 0; d < c; ++d) {
      if (panel.names[c] == panel.names[d]) {
        throw DataError(source + ": row " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 1) + ": duplicate series name '" + panel.names[c] + "'");
      }
    }
  }
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != n) {
      throw DataError(source + ": row " + std::to_string(line_no) + ": expected " +
                      std::to_string(n) + " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < n; ++c) {
      double v = 0.0;
      const std::string cell = trim(cells[c]);
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw DataError(source + ": row " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 1) + ": not a finite number: '" + cell + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw DataError(source + ": no data rows");
  panel.values = Tensor({rows, n}, std::move(values));
  return panel;
}

SeriesPanel load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

void save_csv(const SeriesPanel& panel, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < panel.series(); ++c) out << (c ? "," : "") << panel.names[c];
  out << '\n';
  for (std::size_t t = 0; t < panel.steps(); ++t) {
    for (std::size_t c = 0; c < panel.series(); ++c) {
      out << (c ? "," : "") << format_double(panel.values(t, c));
    }
    out << '\n';
  }
}

void save_matrix_csv(const Tensor& matrix, const std::vector<std::string>& names,
                     const std::filesystem::path& path) {
  if (matrix.rows() != names.size() || matrix.cols() != names.size()) {
    throw ShapeError("save_matrix_csv: matrix does not match the names");
  }
  save_csv({names, matrix, ""}, path);
}

Tensor load_matrix_csv(const std::filesystem::path& path, std::vector<std::string>* names) {
  SeriesPanel p = load_csv(path);
  if (p.steps() != p.series()) {
    throw DataError(path.string() + ": expected a square matrix, got " +
                    std::to_string(p.steps()) + " rows for " + std::to_string(p.series()) +
                    " columns");
  }
  if (names) *names = p.names;
  return p.values;
}

NormStats fit_norm(const Tensor& values) {
  const std::size_t t = values.rows(), n = values.cols();
  if (t == 0) throw DataError("fit_norm: no rows");
  NormStats s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  for (std::size_t c = 0; c < n; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < t; ++r) m += values(r, c);
    m /= static_cast<double>(t);
    double v = 0.0;
    for (std::size_t r = 0; r < t; ++r) v += (values(r, c) - m) * (values(r, c) - m);
    double sd = std::sqrt(v / static_cast<double>(t));
    if (sd < kMinStd) {
      sd = 1.0;
      s.constant[c] = true;
    }
    s.mean[c] = m;
    s.std[c] = sd;
  }
  return s;
}

Tensor apply_norm(const Tensor& values, const NormStats& stats) {
  if (values.cols() != stats.mean.size()) throw ShapeError("apply_norm: series count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - stats.mean[c]) / stats.std[c];
  return out;
}

Tensor inverse_transform(const Tensor& values, const NormStats& stats) {
  if (values.cols() != stats.mean.size()) throw ShapeError("inverse_transform: series count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * stats.std[c] + stats.mean[c];
  return out;
}

std::pair<SeriesPanel, NormStats> normalize(const SeriesPanel& panel) {
  NormStats stats = fit_norm(panel.values);
  SeriesPanel out = panel;
  out.values = apply_norm(panel.values, stats);
  return {std::move(out), std::move(stats)};
}

std::vector<std::size_t> window_starts(std::size_t steps, std::size_t window, std::size_t horizon,
                                       std::size_t stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (window + horizon > steps) {
    throw DataError("window length " + std::to_string(window) + " plus horizon " +
                    std::to_string(horizon) + " exceeds the " + std::to_string(steps) +
                    " available time steps");
  }
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t + window + horizon <= steps; t += stride) out.push_back(t);
  return out;
}

WindowBatch gather_windows(const Tensor& input_values, const Tensor& target_values,
                           const std::vector<std::size_t>& starts, std::size_t window,
                           std::size_t horizon) {
  const std::size_t n = input_values.cols();
  if (target_values.rows() != input_values.rows() || target_values.cols() != n) {
    throw ShapeError("gather_windows: input and target panels differ in shape");
  }
  WindowBatch b;
  b.series = n;
  b.starts = starts;
  b.inputs = Tensor::matrix(starts.size() * n, window);
  b.targets = Tensor::matrix(starts.size() * n, horizon);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t t0 = starts[k];
    if (t0 + window + horizon > input_values.rows()) {
      throw DataError("gather_windows: window starting at " + std::to_string(t0) +
                      " runs past the end of the panel");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < window; ++l) b.inputs(k * n + i, l) = input_values(t0 + l, i);
      for (std::size_t h = 0; h < horizon; ++h) {
        b.targets(k * n + i, h) = target_values(t0 + window + h, i);
      }
    }
  }
  return b;
}

WindowBatch gather_windows(const Tensor& values, const std::vector<std::size_t>& starts,
                           std::size_t window, std::size_t horizon) {
  return gather_windows(values, values, starts, window, horizon);
}

WindowBatch make_windows(const Tensor& values, std::size_t window, std::size_t horizon,
                         std::size_t stride) {
  return gather_windows(values, window_starts(values.rows(), window, horizon, stride), window,
                        horizon);
}

WindowSplit split_windows(const std::vector<std::size_t>& starts, double train_fraction,
                          double val_fraction) {
  if (!(train_fraction > 0.0) || val_fraction < 0.0 || train_fraction + val_fraction >= 1.0) {
    throw ConfigError("split fractions must satisfy train > 0, val >= 0, train + val < 1");
  }
  const std::size_t total = starts.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * total));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * total));
  if (n_train == 0 || (val_fraction > 0.0 && n_val == 0) || n_train + n_val >= total) {
    throw DataError("too few windows (" + std::to_string(total) + ") for the requested split");
  }
  WindowSplit s;
  s.train.assign(starts.begin(), starts.begin() + n_train);
  s.val.assign(starts.begin() + n_train, starts.begin() + n_train + n_val);
  s.test.assign(starts.begin() + n_train + n_val, starts.end());
  return s;
}

void SyntheticSpec::validate() const {
  if (n < 1) throw ConfigError("synthetic N must be >= 1");
  if (t < 1) throw ConfigError("synthetic T must be >= 1");
  if (!(density >= 0.0 && density <= 1.0)) throw ConfigError("edge density must lie in [0, 1]");
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw ConfigError("coupling must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be >= 0");
}

std::string SyntheticSpec::warning() const {
  if (t >= 10 * n) return {};
  return "T = " + std::to_string(t) + " is below 10 N = " + std::to_string(10 * n) +
         "; structure may not be identifiable";
}

SyntheticData synth_var(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  RngStream graph_rng(spec.seed, "synth-graph");
  RngStream sign_rng(spec.seed, "synth-sign");
  RngStream noise_rng(spec.seed, "synth-noise");

  SyntheticData out;
  out.adjacency = Tensor::matrix(n, n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    w(i, i) = kSelfWeight;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Draw both streams for every pair so the graph does not shift the signs.
      const bool edge = graph_rng.uniform() < spec.density;
      const double sign = sign_rng.uniform() < 0.5 ? -1.0 : 1.0;
      if (!edge) continue;
      out.adjacency(i, j) = out.adjacency(j, i) = 1.0;
      w(i, j) = w(j, i) = spec.coupling * sign;
    }
  }
  // Symmetric, so the spectral radius is the largest |eigenvalue|.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("synth_var: eigenvalue solve failed");
  const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw NumericalError("synth_var: cannot rescale a transition matrix with spectral radius " +
                         std::to_string(radius));
  }
  w *= kSpectralRadius / radius;

  out.weights = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.weights(i, j) = w(i, j);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n), e(n);
  out.panel.values = Tensor::matrix(spec.t, n);
  for (std::size_t step = 0; step < kBurnIn + spec.t; ++step) {
    for (std::size_t i = 0; i < n; ++i) e(i) = spec.noise * noise_rng.normal();
    y = w * y + e;
    if (step < kBurnIn) continue;
    for (std::size_t i = 0; i < n; ++i) out.panel.values(step - kBurnIn, i) = y(i);
  }
  if (!out.panel.values.all_finite()) throw NumericalError("synth_var: simulation diverged");
  for (std::size_t i = 0; i < n; ++i) out.panel.names.push_back("s" + std::to_string(i));
  out.panel.frequency = "step";
  return out;
}

void write_synthetic(const SyntheticData& data, const SyntheticSpec& spec,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_csv(data.panel, dir / "data.csv");
  save_matrix_csv(data.adjacency, data.panel.names, dir / "adjacency.csv");
  auto out = open_out(dir / "spec.txt");
  out << "n=" << spec.n << "\nt=" << spec.t << "\ndensity=" << format_double(spec.density)
      << "\ncoupling=" << format_double(spec.coupling) << "\nnoise=" << format_double(spec.noise)
      << "\nseed=" << spec.seed << "\nself_weight=" << format_double(kSelfWeight)
      << "\nspectral_radius=" << format_double(kSpectralRadius) << "\nburn_in=" << kBurnIn
      << '\n';
}

SeriesPanel inject_noise(const SeriesPanel& panel, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0)) throw ConfigError("noise level rho must be >= 0");
  SeriesPanel out = panel;
  if (rho == 0.0) return out;
  const NormStats stats = fit_norm(panel.values);
  const RngStream root(seed, "input-noise");
  for (std::size_t c = 0; c < panel.series(); ++c) {
    RngStream rng = root.substream(panel.names[c]);
    const double scale = rho * (stats.constant[c] ? 0.0 : stats.std[c]);
    for (std::size_t t = 0; t < panel.steps(); ++t) out.values(t, c) += scale * rng.normal();
  }
  return out;
}

Tensor sector_partition_graph(const std::vector<std::string>& labels) {
  const std::size_t n = labels.size();
  Tensor a = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i != j && labels[i] == labels[j]) ? 1.0 : 0.0;
  return a;
}

}  // namespace stoic::data
