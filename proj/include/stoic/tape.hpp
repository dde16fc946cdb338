#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stoic/param_store.hpp"
#include "stoic/tensor.hpp"

namespace stoic::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  double item() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using BackwardFn = std::function<void(Tape&, std::size_t self)>;

// Records primitive operations in execution order (which is a topological
// order by construction) and replays them in reverse to accumulate gradients.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Differentiable input whose gradient stays readable after backward().
  Var leaf(Tensor value);
  // Parameter leaf; backward() adds into Parameter::grad. One node per
  // parameter per tape regardless of how often it is requested.
  Var param(Parameter& p);
  Var param(ParamStore& store, std::string_view name);

  Var record(std::string_view op, Tensor value, std::vector<std::size_t> inputs,
             BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. Allowed once per tape. Frees
  // the values and gradients of non-leaf nodes afterwards.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const;
  // Gradient of a leaf after backward(); zeros when nothing flowed into it.
  Tensor grad(Var v) const;
  // Accumulator for node `id`, allocated as zeros on first use.
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool backward_done() const noexcept { return done_; }

  void set_nan_check(bool on) noexcept { nan_check_ = on; }
  bool nan_check() const noexcept { return nan_check_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::string_view op;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool is_leaf = false;
    bool has_grad = false;
    bool freed = false;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_ids_;
  bool done_ = false;
  bool nan_check_ = false;
};

// NaN-scan debug mode. Initialized from the STOIC_NAN_CHECK environment
// variable ("1" enables); new tapes pick up the current default.
bool nan_check_default();
void set_nan_check_default(bool on);

}  // namespace stoic::ad
