#pragma once

#include <cstdint>

#include "dtm/params.hpp"

namespace dtm {

// Adam with bias correction in the step-size form
//   alpha_t = lr * sqrt(1 - beta2^t) / (1 - beta1^t)
//   p      -= alpha_t * m / (sqrt(v) + eps)
// plus decoupled weight decay applied as p -= lr * wd * p before the update.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::map<std::string, Tensor> m;  // first moments, zero at step 0
  std::map<std::string, Tensor> v;  // second moments, elementwise >= 0
};

AdamState adam_init(const ParamStore& params);

void adam_step(AdamState& state, ParamStore& params,
               const std::map<std::string, Tensor>& grads, double lr,
               double weight_decay);

}  // namespace dtm
