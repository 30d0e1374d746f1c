#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kcse/matrix.hpp"
#include "kcse/param_store.hpp"

namespace kcse {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the
/// tape is cleared or destroyed.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient of the last backward() target with respect to this value.
  /// Zero-sized if the node does not depend on any parameter.
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records a computation over matrices for reverse-mode differentiation.
///
/// Parameters enter through param(), which binds a leaf to a ParamStore
/// entry; backward() adds dLoss/dParam into that entry's gradient. Calling
/// backward() twice without ParamStore::zero_grad() accumulates.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to `store[name]`. Requesting the same name twice returns the
  /// same leaf.
  Var param(ParamStore& store, std::string_view name);

  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  using Backprop = std::function<void(Tape&, std::uint32_t self)>;

  /// Records an op result. `inputs` decide whether the result needs a
  /// gradient; `backprop` pushes this node's gradient to its inputs.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop);

  const Matrix& value(std::uint32_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::uint32_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  /// Gradient buffer of an input, allocated on first use. Only valid inside
  /// a backprop callback, for inputs with needs_grad().
  Matrix& grad_buffer(std::uint32_t id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backprop backprop;
    Parameter* bound = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_leaves_;
};

enum class Activation { none, relu, sigmoid };

/// Compressed rows of a constant sparse matrix used for neighbourhood
/// aggregation: output row k is sum_j coeff[j] * x[col[j]] over the k-th
/// segment. Entries are summed in stored order.
struct SparseRows {
  std::size_t num_cols = 0;  // rows of the dense operand
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> coeffs;
  std::size_t num_rows() const { return offsets.size() - 1; }
};

// Differentiable ops. Shapes are checked; mismatches throw DimensionError.
Var matmul(Var a, Var b);
/// x * W^T with W laid out as out x in.
Var matmul_bt(Var x, Var w);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1 x cols row to every row of `a`.
Var add_row(Var a, Var row);
Var relu(Var a);
Var sigmoid(Var a);
Var activate(Var a, Activation act);
Var square(Var a);
Var concat_cols(Var a, Var b);
/// Stacks same-width matrices vertically.
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var x, std::span<const std::uint32_t> rows);
/// base with src rows added at `rows` (repeats accumulate).
Var index_add_rows(Var base, std::span<const std::uint32_t> rows, Var src);
/// `adjacency` is referenced, not copied; it must outlive backward().
Var sparse_aggregate(const SparseRows& adjacency, Var x);
/// Row i * M + j of the result is b[i] + a[j], for a: M x h, b: n x h.
Var pairwise_add(Var a, Var b);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var row_sum(Var a);
Var sum(Var a);
Var mean(Var a);
/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels, via
/// the log-sigmoid form that stays finite for large |logit|.
Var bce_with_logits(Var logits, std::span<const double> labels);

/// Fully connected layer: activation(input * weights^T + bias), weights
/// out x in, bias 1 x out.
Var fc_forward(Var weights, Var bias, Var input, Activation activation);

}  // namespace kcse
