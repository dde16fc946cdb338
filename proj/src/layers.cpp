#include "stoic/layers.hpp"

#include "stoic/errors.hpp"

namespace stoic::nn {

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return ad::relu(x);
    case Activation::kTanh: return ad::tanh(x);
  }
  return x;
}

void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                bool bias) {
  store.add(prefix + ".W", {out, in});
  if (bias) store.add(prefix + ".b", {out}, Init::kZeros);
}

Var linear(Tape& tape, ParamStore& store, std::string_view prefix, Var x) {
  const std::string p(prefix);
  Var w = tape.param(store, p + ".W");
  if (x.cols() != w.cols()) {
    throw ShapeError("linear '" + p + "': input width " + std::to_string(x.cols()) +
                     ", expected " + std::to_string(w.cols()));
  }
  Var y = ad::matmul_nt(x, w);
  if (store.contains(p + ".b")) y = ad::add_row(y, tape.param(store, p + ".b"));
  return y;
}

void add_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec) {
  if (spec.sizes.size() < 2) throw std::invalid_argument("mlp '" + prefix + "' needs >= 2 sizes");
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    add_linear(store, prefix + ".l" + std::to_string(l), spec.sizes[l], spec.sizes[l + 1]);
  }
}

Var mlp_forward(Tape& tape, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                Var x) {
  if (x.cols() != spec.sizes.front()) {
    throw ShapeError("mlp '" + prefix + "': input width " + std::to_string(x.cols()) +
                     ", expected " + std::to_string(spec.sizes.front()));
  }
  const std::size_t layers = spec.sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    x = linear(tape, store, prefix + ".l" + std::to_string(l), x);
    x = activate(x, l + 1 == layers ? spec.output : spec.hidden);
  }
  return x;
}

void add_gru(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden) {
  for (const char* g : {"z", "r", "h"}) {
    store.add(prefix + ".W_" + g, {hidden, in});
    store.add(prefix + ".U_" + g, {hidden, hidden});
    store.add(prefix + ".b_" + g, {hidden}, Init::kZeros);
  }
}

Var gru_cell(Tape& tape, ParamStore& store, const std::string& prefix, Var x, Var h) {
  auto w = [&](const char* name) { return tape.param(store, prefix + name); };
  Var uz = w(".U_z");
  if (h.cols() != uz.cols() || x.cols() != w(".W_z").cols() || x.rows() != h.rows()) {
    throw ShapeError("gru '" + prefix + "': got x " + x.value().shape_string() + ", h " +
                     h.value().shape_string());
  }
  auto gate = [&](const char* g, Var hin) {
    const std::string s(g);
    Var pre = ad::matmul_nt(x, w((".W_" + s).c_str())) +
              ad::matmul_nt(hin, w((".U_" + s).c_str()));
    return ad::add_row(pre, w((".b_" + s).c_str()));
  };
  Var z = ad::sigmoid(gate("z", h));
  Var r = ad::sigmoid(gate("r", h));
  Var candidate = ad::tanh(gate("h", r * h));
  return h + z * (candidate - h);
}

void add_bigru(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden) {
  add_gru(store, prefix + ".gru_fwd", in, hidden);
  add_gru(store, prefix + ".gru_bwd", in, hidden);
}

Var bigru_encode(Tape& tape, ParamStore& store, const std::string& prefix,
                 const std::vector<Var>& steps) {
  if (steps.empty()) throw std::invalid_argument("bigru '" + prefix + "': empty sequence");
  const std::size_t hidden = store.at(prefix + ".gru_fwd.U_z").value.rows();
  const std::size_t rows = steps.front().rows();
  Var hf = tape.constant(Tensor::matrix(rows, hidden));
  for (const Var& x : steps) hf = gru_cell(tape, store, prefix + ".gru_fwd", x, hf);
  Var hb = tape.constant(Tensor::matrix(rows, hidden));
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    hb = gru_cell(tape, store, prefix + ".gru_bwd", *it, hb);
  }
  return ad::concat_cols({hf, hb});
}

Var bigru_encode(Tape& tape, ParamStore& store, const std::string& prefix,
                 const Tensor& sequences) {
  const std::size_t rows = sequences.rows(), len = sequences.cols();
  std::vector<Var> steps;
  steps.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    Tensor col = Tensor::matrix(rows, 1);
    for (std::size_t r = 0; r < rows; ++r) col[r] = sequences(r, t);
    steps.push_back(tape.constant(std::move(col)));
  }
  return bigru_encode(tape, store, prefix, steps);
}

void add_gcn(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out) {
  store.add(prefix + ".W", {in, out});
}

Var gcn_propagate(Var features, Var normalized, Var weight, Activation act, std::size_t block) {
  if (features.cols() != weight.rows()) {
    throw ShapeError("gcn: feature width " + std::to_string(features.cols()) +
                     " against weight " + weight.value().shape_string());
  }
  return activate(ad::block_matmul(normalized, ad::matmul(features, weight), block), act);
}

Var gcn_layer(Var features, Var adjacency, Var weight, Activation act, std::size_t block) {
  return gcn_propagate(features, ad::gcn_normalize(adjacency, block), weight, act, block);
}

}  // namespace stoic::nn
