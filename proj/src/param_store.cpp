#include "stoic/param_store.hpp"

#include <cmath>
#include <set>

#include "stoic/errors.hpp"

namespace stoic {

std::string group_of(std::string_view name) {
  return std::string(name.substr(0, name.find('.')));
}

Parameter& ParamStore::add(const std::string& name, std::vector<std::size_t> shape,
                           Init init) {
  Tensor value(shape, 0.0);
  if (init == Init::kUniformFanIn) {
    const double fan_in = shape.empty() ? 1.0 : static_cast<double>(shape.back());
    const double bound = 1.0 / std::sqrt(fan_in);
    RngStream rng = init_rng_.substream(name);
    for (auto& v : value.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return add(name, std::move(value));
}

Parameter& ParamStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.grad = Tensor(value.shape(), 0.0);
  p.m = Tensor(value.shape(), 0.0);
  p.v = Tensor(value.shape(), 0.0);
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

bool ParamStore::contains(std::string_view name) const { return params_.find(name) != params_.end(); }

Parameter& ParamStore::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Parameter& ParamStore::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::groups() const {
  std::set<std::string> g;
  for (const auto& [name, _] : params_) g.insert(group_of(name));
  return {g.begin(), g.end()};
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::set(std::string_view name, const Tensor& value) {
  Parameter& p = at(name);
  if (!p.value.same_shape(value)) {
    throw ShapeError("parameter '" + p.name + "' has shape " + p.value.shape_string() +
                     ", got " + value.shape_string());
  }
  p.value = value;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

}  // namespace stoic
