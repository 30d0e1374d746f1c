#include "kcse/param_store.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/rng.hpp"

namespace kcse {

Matrix& ParamStore::add(std::string_view name, Matrix initial) {
  if (contains(name)) throw UsageError(fmt::format("parameter '{}' already registered", name));
  Matrix grad(initial.rows(), initial.cols());
  auto [it, _] = params_.emplace(std::string(name), Parameter{std::move(initial), std::move(grad)});
  return it->second.value;
}

Parameter& ParamStore::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError(fmt::format("unknown parameter '{}'", name));
  return it->second;
}

const Parameter& ParamStore::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError(fmt::format("unknown parameter '{}'", name));
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

Matrix xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return uniform_matrix(rows, cols, -bound, bound, rng);
}

}  // namespace kcse
