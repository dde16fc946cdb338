#include "stoic/tape.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "stoic/errors.hpp"

namespace stoic::ad {

namespace {

bool env_nan_check() {
  const char* v = std::getenv("STOIC_NAN_CHECK");
  return v != nullptr && std::string(v) == "1";
}

std::atomic<bool>& nan_default() {
  static std::atomic<bool> flag{env_nan_check()};
  return flag;
}

}  // namespace

bool nan_check_default() { return nan_default().load(); }
void set_nan_check_default(bool on) { nan_default().store(on); }

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var: use of an empty handle");
  return tape_->value(id_);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("item() on non-scalar of shape " + v.shape_string());
  return v[0];
}

Tape::Tape() : nan_check_(nan_check_default()) {}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "leaf";
  n.is_leaf = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.op = "param";
  n.param = &p;
  n.is_leaf = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_ids_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamStore& store, std::string_view name) { return param(store.at(name)); }

Var Tape::record(std::string_view op, Tensor value, std::vector<std::size_t> inputs,
                 BackwardFn backward) {
  if (done_) throw std::logic_error("tape: recording after backward()");
  if (nan_check_ && !value.all_finite()) {
    value.check_finite("output of op '" + std::string(op) + "'");
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (auto i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.freed) {
    throw std::logic_error("tape: value of intermediate '" + std::string(n.op) +
                           "' was released by backward()");
  }
  return n.value;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::logic_error("backward: loss recorded on another tape");
  if (done_) throw std::logic_error("backward: called twice on the same tape");
  if (nodes_[loss.id()].value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     nodes_[loss.id()].value.shape_string());
  }
  done_ = true;
  grad_buffer(loss.id()).fill(1.0);

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.has_grad) continue;
    if (nan_check_ && !n.grad.all_finite()) {
      n.grad.check_finite("gradient of op '" + std::string(n.op) + "'");
    }
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      double* g = n.param->grad.data();
      const double* src = n.grad.data();
      for (std::size_t i = 0; i < n.grad.size(); ++i) g[i] += src[i];
    }
  }

  for (auto& n : nodes_) {
    if (n.is_leaf) continue;
    n.value = Tensor();
    n.grad = Tensor();
    n.backward = nullptr;
    n.has_grad = false;
    n.freed = true;
  }
}

}  // namespace stoic::ad
