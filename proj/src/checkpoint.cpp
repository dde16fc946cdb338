#include "stoic/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stoic/errors.hpp"

namespace stoic {

namespace {

// Line-oriented reader that reports 1-based line numbers in every error.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw DataError(source_ + ":" + std::to_string(line_no_ + 1) + ": unexpected end of file, expected " + what);
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  bool eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_tensor(std::ostringstream& out, const std::string& name, const Tensor& t) {
  out << name << " dims";
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << format_real(t.data()[i]);
  out << '\n';
}

Tensor row_of(const std::vector<double>& v) { return Tensor({1, v.size()}, v); }

std::pair<std::string, std::string> key_value(Reader& r, const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) r.fail("expected key=value, got '" + line + "'");
  return {line.substr(0, eq), line.substr(eq + 1)};
}

std::uint64_t parse_uint(Reader& r, const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) r.fail("expected an integer, got '" + s + "'");
  return v;
}

double parse_real(Reader& r, const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) r.fail("expected a number, got '" + s + "'");
  return v;
}

}  // namespace

Checkpoint snapshot(const RunConfig& config, const std::vector<std::string>& series,
                    const data::NormStats& norm, const ReferenceSet& refs,
                    const StoicModel& model) {
  Checkpoint c;
  c.config = config;
  c.series = series;
  c.norm = norm;
  c.ref_windows = refs.windows;
  for (const auto& [name, p] : model.params()) c.params.emplace(name, p.value);
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "[config]\n";
  for (const auto& [k, v] : ckpt.config.to_pairs()) out << k << '=' << v << '\n';
  out << "[state]\n";
  out << "series=" << join(ckpt.series, ',') << '\n';
  out << "epochs=" << ckpt.epochs << '\n';
  out << "best_epoch=" << ckpt.best_epoch << '\n';
  out << "best_val_crps=" << format_real(ckpt.best_val_crps) << '\n';
  out << "[tensors]\n";
  out << "count=" << ckpt.params.size() + 4 << '\n';
  std::vector<double> constant;
  for (bool b : ckpt.norm.constant) constant.push_back(b ? 1.0 : 0.0);
  write_tensor(out, "norm.mean", row_of(ckpt.norm.mean));
  write_tensor(out, "norm.std", row_of(ckpt.norm.std));
  write_tensor(out, "norm.constant", row_of(constant));
  write_tensor(out, "refs.windows", ckpt.ref_windows);
  for (const auto& [name, t] : ckpt.params) write_tensor(out, name, t);
  return out.str();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint parse_checkpoint(std::istream& in, const std::string& source) {
  Reader r(in, source);
  Checkpoint c;
  {
    const auto head = split_ws(r.next("the checkpoint header"));
    if (head.size() != 2 || head[0] != kCheckpointMagic) r.fail("not a checkpoint (bad magic line)");
    if (head[1] != kCheckpointVersion) {
      r.fail("unsupported checkpoint version '" + head[1] + "'; this build reads " +
             kCheckpointVersion + " only");
    }
  }
  if (r.next("[config]") != "[config]") r.fail("expected [config]");
  for (std::string line = r.next("config entries"); line != "[state]"; line = r.next("[state]")) {
    const auto [k, v] = key_value(r, line);
    try {
      c.config.set(k, v);
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
  }
  for (std::string line = r.next("state entries"); line != "[tensors]"; line = r.next("[tensors]")) {
    const auto [k, v] = key_value(r, line);
    if (k == "series") c.series = split_on(v, ',');
    else if (k == "epochs") c.epochs = parse_uint(r, v);
    else if (k == "best_epoch") c.best_epoch = parse_uint(r, v);
    else if (k == "best_val_crps") c.best_val_crps = parse_real(r, v);
    else r.fail("unknown state key '" + k + "'");
  }
  const auto [ck, cv] = key_value(r, r.next("tensor count"));
  if (ck != "count") r.fail("expected count=");
  const std::size_t count = parse_uint(r, cv);
  std::map<std::string, Tensor> tensors;
  for (std::size_t t = 0; t < count; ++t) {
    const auto head = split_ws(r.next("a tensor header"));
    if (head.size() < 3 || head[1] != "dims") r.fail("expected 'name dims d1 d2 ...'");
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::size_t i = 2; i < head.size(); ++i) {
      shape.push_back(parse_uint(r, head[i]));
      total *= shape.back();
    }
    const auto cells = split_ws(r.next(("values of " + head[0]).c_str()));
    if (cells.size() != total) {
      r.fail(head[0] + ": expected " + std::to_string(total) + " values, found " +
             std::to_string(cells.size()));
    }
    std::vector<double> values;
    values.reserve(total);
    for (const auto& cell : cells) values.push_back(parse_real(r, cell));
    if (!tensors.emplace(head[0], Tensor(shape, std::move(values))).second) {
      r.fail("duplicate tensor '" + head[0] + "'");
    }
  }
  if (!r.eof()) r.fail("trailing content after the last tensor");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) r.fail("missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  const Tensor mean = take("norm.mean"), sd = take("norm.std"), constant = take("norm.constant");
  if (mean.size() != c.series.size() || sd.size() != c.series.size() ||
      constant.size() != c.series.size()) {
    r.fail("normalization statistics do not match the series count");
  }
  c.norm.mean.assign(mean.data(), mean.data() + mean.size());
  c.norm.std.assign(sd.data(), sd.data() + sd.size());
  for (std::size_t i = 0; i < constant.size(); ++i) c.norm.constant.push_back(constant.data()[i] != 0.0);
  c.ref_windows = take("refs.windows");
  c.params = std::move(tensors);
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Checkpoint c = parse_checkpoint(in, path.string());
  restore_model(c);  // shape validation against the stored config
  return c;
}

StoicModel restore_model(const Checkpoint& ckpt) {
  StoicModel model(ckpt.config.model(ckpt.series.size()), ckpt.config.seed);
  auto& store = model.params();
  for (const auto& [name, p] : store) {
    const auto it = ckpt.params.find(name);
    if (it == ckpt.params.end()) throw DataError("checkpoint is missing parameter '" + name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has the wrong shape for this config");
    }
  }
  for (const auto& [name, t] : ckpt.params) {
    if (!store.contains(name)) throw DataError("checkpoint has unexpected parameter '" + name + "'");
    store.set(name, t);
  }
  return model;
}

ReferenceSet restore_refs(const Checkpoint& ckpt, StoicModel& model) {
  ReferenceSet refs;
  refs.windows = ckpt.ref_windows;
  if (refs.windows.cols() != ckpt.config.window) {
    throw DataError("checkpoint reference windows do not match the window length");
  }
  model.refresh(refs);
  return refs;
}

}  // namespace stoic
