#pragma once

#include <array>
#include <string>
#include <vector>

#include "stoic/param_store.hpp"
#include "stoic/tensor.hpp"

namespace stoic::testing {

// Scalar GRU weights in the order W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h.
inline const std::array<double, 9> kFwd = {0.5, -0.3, 0.1, 0.2, 0.4, -0.1, 1.0, 0.6, 0.05};
inline const std::array<double, 9> kBwd = {-0.4, 0.2, 0.0, 0.3, -0.5, 0.2, 0.7, -0.8, -0.1};

inline void set_values(ParamStore& s, const std::string& name, std::vector<double> v) {
  Parameter& p = s.at(name);
  p.value = Tensor(p.value.shape(), std::move(v));
}

inline void set_scalar_gru(ParamStore& s, const std::string& prefix,
                           const std::array<double, 9>& v) {
  const char* names[] = {".W_z", ".U_z", ".b_z", ".W_r", ".U_r", ".b_r", ".W_h", ".U_h", ".b_h"};
  for (int i = 0; i < 9; ++i) s.at(prefix + names[i]).value.fill(v[i]);
}

inline void zero_all(ParamStore& s) {
  for (const auto& name : s.names()) s.at(name).value.fill(0.0);
}

inline Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor y = Tensor::matrix(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(perm[i], j);
  return y;
}

}  // namespace stoic::testing
