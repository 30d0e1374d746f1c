#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "kcse/param_store.hpp"

namespace kcse {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}

  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::pair<Matrix, Matrix>, std::less<>> moments;  // name -> (m, v)
};

/// One bias-corrected Adam update over every parameter, then clears the
/// gradients.
void adam_step(AdamState& state, ParamStore& params);

}  // namespace kcse
