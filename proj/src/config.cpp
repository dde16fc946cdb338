#include "stoic/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "stoic/errors.hpp"

namespace stoic {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* b = v.data();
  const char* e = b + v.size();
  if (b != e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void RunConfig::validate() const {
  if (data.empty()) synth.validate();
  if (window < 2) throw ConfigError("window must be >= 2");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(train_fraction > 0.0) || val_fraction <= 0.0 || train_fraction + val_fraction >= 1.0) {
    throw ConfigError("split fractions must satisfy train > 0, val > 0, train + val < 1");
  }
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (refs < 1) throw ConfigError("refs must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (eval_samples < 1 || val_samples < 1) throw ConfigError("sample counts must be >= 1");
  if (!(beta_z >= 0.0) || !(beta_g >= 0.0)) throw ConfigError("KL weights must be >= 0");
  if (!(prior_p > 0.0 && prior_p < 1.0)) throw ConfigError("prior_p must lie in (0, 1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

ModelConfig RunConfig::model(std::size_t series) const {
  ModelConfig m;
  m.series = series;
  m.window = window;
  m.horizon = horizon;
  m.hidden = hidden;
  m.refs = refs;
  m.tau = tau;
  m.prior_p = prior_p;
  m.beta_z = beta_z;
  m.beta_g = beta_g;
  m.hard_graph = hard_graph;
  m.ablation = ablation;
  return m;
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"data", data},
      {"synth_n", u(synth.n)},
      {"synth_t", u(synth.t)},
      {"synth_density", format_real(synth.density)},
      {"synth_coupling", format_real(synth.coupling)},
      {"synth_noise", format_real(synth.noise)},
      {"synth_seed", u(synth.seed)},
      {"window", u(window)},
      {"horizon", u(horizon)},
      {"stride", u(stride)},
      {"train_fraction", format_real(train_fraction)},
      {"val_fraction", format_real(val_fraction)},
      {"hidden", u(hidden)},
      {"refs", u(refs)},
      {"tau", format_real(tau)},
      {"hard_graph", b(hard_graph)},
      {"eval_samples", u(eval_samples)},
      {"val_samples", u(val_samples)},
      {"beta_z", format_real(beta_z)},
      {"beta_g", format_real(beta_g)},
      {"prior_p", format_real(prior_p)},
      {"ablation", to_string(ablation)},
      {"lr", format_real(lr)},
      {"batch", u(batch)},
      {"max_epochs", u(max_epochs)},
      {"patience", u(patience)},
      {"refresh", refresh == RefreshPolicy::kEpoch ? "epoch" : "batch"},
      {"seed", u(seed)},
  };
}

void RunConfig::set(const std::string& key, const std::string& v) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"data", [](RunConfig& c, const std::string& s) { c.data = s; }},
      {"synth_n", [](RunConfig& c, const std::string& s) { c.synth.n = to_uint("synth_n", s); }},
      {"synth_t", [](RunConfig& c, const std::string& s) { c.synth.t = to_uint("synth_t", s); }},
      {"synth_density",
       [](RunConfig& c, const std::string& s) { c.synth.density = to_real("synth_density", s); }},
      {"synth_coupling",
       [](RunConfig& c, const std::string& s) { c.synth.coupling = to_real("synth_coupling", s); }},
      {"synth_noise",
       [](RunConfig& c, const std::string& s) { c.synth.noise = to_real("synth_noise", s); }},
      {"synth_seed", [](RunConfig& c, const std::string& s) { c.synth.seed = to_uint("synth_seed", s); }},
      {"window", [](RunConfig& c, const std::string& s) { c.window = to_uint("window", s); }},
      {"horizon", [](RunConfig& c, const std::string& s) { c.horizon = to_uint("horizon", s); }},
      {"stride", [](RunConfig& c, const std::string& s) { c.stride = to_uint("stride", s); }},
      {"train_fraction",
       [](RunConfig& c, const std::string& s) { c.train_fraction = to_real("train_fraction", s); }},
      {"val_fraction",
       [](RunConfig& c, const std::string& s) { c.val_fraction = to_real("val_fraction", s); }},
      {"hidden", [](RunConfig& c, const std::string& s) { c.hidden = to_uint("hidden", s); }},
      {"refs", [](RunConfig& c, const std::string& s) { c.refs = to_uint("refs", s); }},
      {"tau", [](RunConfig& c, const std::string& s) { c.tau = to_real("tau", s); }},
      {"hard_graph", [](RunConfig& c, const std::string& s) { c.hard_graph = to_bool("hard_graph", s); }},
      {"eval_samples",
       [](RunConfig& c, const std::string& s) { c.eval_samples = to_uint("eval_samples", s); }},
      {"val_samples", [](RunConfig& c, const std::string& s) { c.val_samples = to_uint("val_samples", s); }},
      {"beta_z", [](RunConfig& c, const std::string& s) { c.beta_z = to_real("beta_z", s); }},
      {"beta_g", [](RunConfig& c, const std::string& s) { c.beta_g = to_real("beta_g", s); }},
      {"prior_p", [](RunConfig& c, const std::string& s) { c.prior_p = to_real("prior_p", s); }},
      {"ablation", [](RunConfig& c, const std::string& s) { c.ablation = parse_ablation(s); }},
      {"lr", [](RunConfig& c, const std::string& s) { c.lr = to_real("lr", s); }},
      {"batch", [](RunConfig& c, const std::string& s) { c.batch = to_uint("batch", s); }},
      {"max_epochs", [](RunConfig& c, const std::string& s) { c.max_epochs = to_uint("max_epochs", s); }},
      {"patience", [](RunConfig& c, const std::string& s) { c.patience = to_uint("patience", s); }},
      {"refresh",
       [](RunConfig& c, const std::string& s) {
         if (s == "epoch") c.refresh = RefreshPolicy::kEpoch;
         else if (s == "batch") c.refresh = RefreshPolicy::kBatch;
         else throw ConfigError("refresh: expected epoch or batch, got '" + s + "'");
       }},
      {"seed", [](RunConfig& c, const std::string& s) { c.seed = to_uint("seed", s); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(*this, v);
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      cfg.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

}  // namespace stoic
