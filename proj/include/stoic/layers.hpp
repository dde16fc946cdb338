#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stoic/ops.hpp"
#include "stoic/param_store.hpp"

// Neural building blocks over the tape. Layers read their weights from a
// ParamStore by dotted name; registration (add_*) and use are separate so a
// model declares its parameters once and then replays forward passes.
namespace stoic::nn {

using ad::Tape;
using ad::Var;

enum class Activation { kIdentity, kRelu, kTanh };

Var activate(Var x, Activation a);

// y = x W^T + b with W [out x in] and b [out].
void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                bool bias = true);
Var linear(Tape& tape, ParamStore& store, std::string_view prefix, Var x);

struct MlpSpec {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  Activation hidden = Activation::kRelu;
  Activation output = Activation::kIdentity;
};

// Layers are named <prefix>.l0, <prefix>.l1, ...
void add_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec);
Var mlp_forward(Tape& tape, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                Var x);

// Standard GRU:
//   z  = sigmoid(W_z x + U_z h + b_z)
//   r  = sigmoid(W_r x + U_r h + b_r)
//   h~ = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - z) * h + z * h~
void add_gru(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden);
Var gru_cell(Tape& tape, ParamStore& store, const std::string& prefix, Var x, Var h);

// Bidirectional GRU with separate <prefix>.gru_fwd / <prefix>.gru_bwd weights
// and zero initial states. Returns [rows x 2*hidden]: final forward state,
// then final backward state (the backward pass reads the sequence reversed).
void add_bigru(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden);
Var bigru_encode(Tape& tape, ParamStore& store, const std::string& prefix,
                 const std::vector<Var>& steps);
// Scalar-input convenience: row r of `sequences` is one length-L sequence.
Var bigru_encode(Tape& tape, ParamStore& store, const std::string& prefix,
                 const Tensor& sequences);

// GCN weight <prefix>.W is [in x out] (features are multiplied on the right).
void add_gcn(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out);
// activation(A_hat (H W)) with A_hat = D^-1/2 (A + I) D^-1/2, per block of
// `block` nodes. `adjacency` is [B*block x block].
Var gcn_layer(Var features, Var adjacency, Var weight, Activation act, std::size_t block);
// Same, with A_hat already normalized.
Var gcn_propagate(Var features, Var normalized, Var weight, Activation act, std::size_t block);

}  // namespace stoic::nn
