#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stoic/rng.hpp"
#include "stoic/tensor.hpp"

namespace stoic {

// One trainable tensor with its gradient slot and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  std::uint64_t step = 0;
};

enum class Init {
  kZeros,
  kUniformFanIn,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = shape.back()
};

// Named parameters, iterated in lexicographic name order. Names are dotted
// paths; the segment before the first dot is the parameter group.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : init_rng_(seed, "param-init") {}

  // Registers a parameter. Each name draws from its own substream, so the
  // set of other parameters never changes its initial value.
  Parameter& add(const std::string& name, std::vector<std::size_t> shape,
                 Init init = Init::kUniformFanIn);
  Parameter& add(const std::string& name, Tensor value);

  bool contains(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::vector<std::string> names() const;
  std::vector<std::string> groups() const;
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  // Replaces a value, keeping the registered shape.
  void set(std::string_view name, const Tensor& value);
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter, std::less<>> params_;
  RngStream init_rng_{0, "param-init"};
};

std::string group_of(std::string_view name);

}  // namespace stoic
