#include "kcse/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace kcse {

namespace {

double evaluate(const LossBuilder& loss_fn) {
  Tape tape;
  return loss_fn(tape).scalar();
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& loss_fn, ParamStore& params, double h) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }

  GradCheckReport report;
  for (auto& [name, p] : params) {
    const Matrix analytic = p.grad;
    auto values = p.value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = evaluate(loss_fn);
      values[i] = saved - h;
      const double minus = evaluate(loss_fn);
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_relative_error || report.worst_parameter.empty()) {
        report.max_relative_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return report;
}

}  // namespace kcse
