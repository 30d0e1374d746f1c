#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kcse/matrix.hpp"

namespace kcse {

class Rng;

struct Parameter {
  Matrix value;
  Matrix grad;  // same shape as value
};

/// Named trainable parameters with matching gradient accumulators.
/// Iteration is in name order, which fixes checkpoint and optimizer order.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  /// Registers a new parameter. Throws UsageError if the name is taken.
  Matrix& add(std::string_view name, Matrix initial);

  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Matrix& value(std::string_view name) { return at(name).value; }
  const Matrix& value(std::string_view name) const { return at(name).value; }
  Matrix& grad(std::string_view name) { return at(name).grad; }
  const Matrix& grad(std::string_view name) const { return at(name).grad; }

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  std::vector<std::string> names() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  /// Exact equality of every value (gradients ignored).
  bool same_values(const ParamStore& other) const;

 private:
  Map params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)) for a rows x cols weight with
/// rows = fan_out, cols = fan_in.
Matrix xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

}  // namespace kcse
