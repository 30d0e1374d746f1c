#pragma once

#include <functional>
#include <string>

#include "kcse/autodiff.hpp"

namespace kcse {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Builds the scalar loss on the given tape, pulling parameters from the
/// store through Tape::param. Must be deterministic for fixed parameters.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h
/// entry by entry. Relative error is |a - n| / max(|a|, |n|, 1e-8).
/// Parameter values are restored and gradients cleared on return.
GradCheckReport finite_diff_check(const LossBuilder& loss_fn, ParamStore& params, double h = 1e-5);

}  // namespace kcse
