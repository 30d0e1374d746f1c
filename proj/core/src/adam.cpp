#include "kcse/adam.hpp"

#include <cmath>

#include "kcse/error.hpp"

namespace kcse {

void adam_step(AdamState& state, ParamStore& params) {
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, p] : params) {
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(name, std::make_pair(Matrix(p.value.rows(), p.value.cols()),
                                             Matrix(p.value.rows(), p.value.cols())))
               .first;
    }
    auto& [m, v] = it->second;
    if (!m.same_shape(p.value)) throw DimensionError("adam_step: moment shape no longer matches '" + name + "'");
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * g;
      vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = md[i] / correction1;
      const double v_hat = vd[i] / correction2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    p.grad.fill(0.0);
  }
}

}  // namespace kcse
