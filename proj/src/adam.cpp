#include "stoic/adam.hpp"

#include <cmath>

#include "stoic/errors.hpp"

namespace stoic {

void adam_step(ParamStore& store, const AdamOptions& o) {
  for (auto& [name, p] : store) {
    if (!p.grad.all_finite()) p.grad.check_finite("gradient of parameter '" + name + "'");
  }
  for (auto& [name, p] : store) {
    ++p.step;
    const double t = static_cast<double>(p.step);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = o.beta1 * p.m[i] + (1.0 - o.beta1) * g;
      p.v[i] = o.beta2 * p.v[i] + (1.0 - o.beta2) * g * g;
      const double m_hat = p.m[i] / c1;
      const double v_hat = p.v[i] / c2;
      p.value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
    p.grad.fill(0.0);
  }
}

}  // namespace stoic
