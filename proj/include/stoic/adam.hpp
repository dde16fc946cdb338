#pragma once

#include "stoic/param_store.hpp"

namespace stoic {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every parameter in the store, then zeroes the
// gradient slots. A non-finite gradient aborts with NumericalError naming the
// parameter before any value is modified.
void adam_step(ParamStore& store, const AdamOptions& options = {});

}  // namespace stoic
