#include "kcse/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kcse/error.hpp"

namespace kcse {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError(fmt::format("expected a scalar, got {}x{}", v.rows(), v.cols()));
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(ParamStore& store, std::string_view name) {
  Parameter& p = store.at(name);
  if (auto it = param_leaves_.find(&p); it != param_leaves_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, true, {}, &p});
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_leaves_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.tape_ != this) throw UsageError("op mixes values from different tapes");
    needs = needs || nodes_[in.id_].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backprop) : Backprop{}, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Matrix& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw UsageError("backward() on a value from another tape");
  const auto& lv = nodes_[loss.id_].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw UsageError(fmt::format("backward() needs a scalar loss, got {}x{}", lv.rows(), lv.cols()));
  }
  for (auto& n : nodes_) n.grad = Matrix();
  if (!nodes_[loss.id_].needs_grad) return;
  grad_buffer(loss.id_)(0, 0) = 1.0;
  for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || (n.grad.size() == 0 && n.value.size() != 0)) continue;
    if (n.backprop) n.backprop(*this, id);
    if (n.bound && n.grad.size() == n.bound->grad.size()) n.bound->grad += n.grad;
  }
}

void Tape::clear() {
  nodes_.clear();
  param_leaves_.clear();
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(fmt::format("{}: shapes {}x{} and {}x{} differ", op, a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  const auto ia = a.id(), ib = b.id();
  return t.record(matmul(a.value(), b.value()), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_buffer(ia) += matmul_bt(g, t.value(ib));
    if (t.needs_grad(ib)) t.grad_buffer(ib) += matmul_at(t.value(ia), g);
  });
}

Var matmul_bt(Var x, Var w) {
  Tape& t = x.tape();
  const auto ix = x.id(), iw = w.id();
  return t.record(matmul_bt(x.value(), w.value()), {x, w}, [ix, iw](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ix)) t.grad_buffer(ix) += matmul(g, t.value(iw));
    if (t.needs_grad(iw)) t.grad_buffer(iw) += matmul_at(g, t.value(ix));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    if (t.needs_grad(ia)) t.grad_buffer(ia) += t.grad(self);
    if (t.needs_grad(ib)) t.grad_buffer(ib) += t.grad(self);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.value().data()[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_buffer(ia) += g;
    if (t.needs_grad(ib)) {
      Matrix& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] -= g.data()[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) {
      Matrix& ga = t.grad_buffer(ia);
      const Matrix& vb = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * vb.data()[i];
    }
    if (t.needs_grad(ib)) {
      Matrix& gb = t.grad_buffer(ib);
      const Matrix& va = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * va.data()[i];
    }
  });
}

Var scale(Var a, double s) {
  const auto ia = a.id();
  return a.tape().record(map(a.value(), [s](double x) { return s * x; }), {a},
                         [ia, s](Tape& t, std::uint32_t self) {
                           const Matrix& g = t.grad(self);
                           Matrix& ga = t.grad_buffer(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += s * g.data()[i];
                         });
}

Var add_row(Var a, Var row) {
  const Matrix& va = a.value();
  const Matrix& vr = row.value();
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw DimensionError(fmt::format("add_row: row is {}x{}, matrix has {} columns", vr.rows(), vr.cols(), va.cols()));
  }
  Matrix out = va;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) dst[c] += vr(0, c);
  }
  const auto ia = a.id(), ir = row.id();
  return a.tape().record(std::move(out), {a, row}, [ia, ir](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_buffer(ia) += g;
    if (t.needs_grad(ir)) {
      Matrix& gr = t.grad_buffer(ir);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
    }
  });
}

Var relu(Var a) {
  const auto ia = a.id();
  return a.tape().record(map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a},
                         [ia](Tape& t, std::uint32_t self) {
                           const Matrix& g = t.grad(self);
                           const Matrix& x = t.value(ia);
                           Matrix& ga = t.grad_buffer(ia);
                           for (std::size_t i = 0; i < g.size(); ++i)
                             if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
                         });
}

Var sigmoid(Var a) {
  const auto ia = a.id();
  return a.tape().record(map(a.value(), logistic), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] += g.data()[i] * s * (1.0 - s);
    }
  });
}

Var activate(Var a, Activation act) {
  switch (act) {
    case Activation::relu:
      return relu(a);
    case Activation::sigmoid:
      return sigmoid(a);
    case Activation::none:
      break;
  }
  return a;
}

Var square(Var a) {
  const auto ia = a.id();
  return a.tape().record(map(a.value(), [](double x) { return x * x; }), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ia);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += 2.0 * x.data()[i] * g.data()[i];
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  if (va.rows() != vb.rows()) {
    throw DimensionError(fmt::format("concat_cols: {} rows vs {} rows", va.rows(), vb.rows()));
  }
  Matrix out(va.rows(), va.cols() + vb.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    std::copy(va.row(r).begin(), va.row(r).end(), out.row(r).begin());
    std::copy(vb.row(r).begin(), vb.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(va.cols()));
  }
  const auto ia = a.id(), ib = b.id();
  const std::size_t ca = va.cols();
  return a.tape().record(std::move(out), {a, b}, [ia, ib, ca](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) {
      Matrix& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < ca; ++c) ga(r, c) += g(r, c);
    }
    if (t.needs_grad(ib)) {
      Matrix& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = ca; c < g.cols(); ++c) gb(r, c - ca) += g(r, c);
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to stack");
  Tape& tape = parts.front().tape();
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw UsageError("op mixes values from different tapes");
    if (p.value().cols() != cols) {
      throw DimensionError(fmt::format("concat_rows: widths {} and {} differ", cols, p.value().cols()));
    }
    rows += p.value().rows();
  }
  Matrix out(rows, cols);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> starts;
  std::size_t r0 = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r0 * cols));
    ids.push_back(p.id());
    starts.push_back(r0);
    r0 += p.value().rows();
  }
  // record() only inspects its inputs for needs_grad; one part that needs a
  // gradient (if any) is enough.
  Var witness = parts.front();
  for (const auto& p : parts)
    if (tape.needs_grad(p.id())) witness = p;
  return tape.record(std::move(out), {witness},
                     [ids = std::move(ids), starts = std::move(starts), cols](Tape& t, std::uint32_t self) {
                       const Matrix& g = t.grad(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (!t.needs_grad(ids[k])) continue;
                         Matrix& gp = t.grad_buffer(ids[k]);
                         const std::size_t offset = starts[k] * cols;
                         for (std::size_t i = 0; i < gp.size(); ++i) gp.data()[i] += g.data()[offset + i];
                       }
                     });
}

Var gather_rows(Var x, std::span<const std::uint32_t> rows) {
  const Matrix& vx = x.value();
  Matrix out(rows.size(), vx.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= vx.rows()) {
      throw DimensionError(fmt::format("gather_rows: row {} of a {}-row matrix", rows[k], vx.rows()));
    }
    std::copy(vx.row(rows[k]).begin(), vx.row(rows[k]).end(), out.row(k).begin());
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto dst = gx.row(idx[k]);
      auto src = g.row(k);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var index_add_rows(Var base, std::span<const std::uint32_t> rows, Var src) {
  const Matrix& vb = base.value();
  const Matrix& vs = src.value();
  if (vs.rows() != rows.size() || vs.cols() != vb.cols()) {
    throw DimensionError(fmt::format("index_add_rows: {} indices for a {}x{} source into {} columns", rows.size(),
                                     vs.rows(), vs.cols(), vb.cols()));
  }
  Matrix out = vb;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= vb.rows()) throw DimensionError("index_add_rows: row index out of range");
    auto dst = out.row(rows[k]);
    auto s = vs.row(k);
    for (std::size_t c = 0; c < s.size(); ++c) dst[c] += s[c];
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  const auto ib = base.id(), is = src.id();
  return base.tape().record(std::move(out), {base, src},
                            [ib, is, idx = std::move(idx)](Tape& t, std::uint32_t self) {
                              const Matrix& g = t.grad(self);
                              if (t.needs_grad(ib)) t.grad_buffer(ib) += g;
                              if (t.needs_grad(is)) {
                                Matrix& gs = t.grad_buffer(is);
                                for (std::size_t k = 0; k < idx.size(); ++k) {
                                  auto dst = gs.row(k);
                                  auto s = g.row(idx[k]);
                                  for (std::size_t c = 0; c < s.size(); ++c) dst[c] += s[c];
                                }
                              }
                            });
}

Var sparse_aggregate(const SparseRows& adjacency, Var x) {
  const Matrix& vx = x.value();
  if (adjacency.num_cols != vx.rows()) {
    throw DimensionError(
        fmt::format("sparse_aggregate: adjacency spans {} nodes, features have {} rows", adjacency.num_cols, vx.rows()));
  }
  const std::size_t n = adjacency.num_rows();
  Matrix out(n, vx.cols());
  for (std::size_t k = 0; k < n; ++k) {
    auto dst = out.row(k);
    for (std::size_t e = adjacency.offsets[k]; e < adjacency.offsets[k + 1]; ++e) {
      const double w = adjacency.coeffs[e];
      auto src = vx.row(adjacency.cols[e]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  const auto ix = x.id();
  const SparseRows* adj = &adjacency;
  return x.tape().record(std::move(out), {x}, [ix, adj](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t k = 0; k < adj->num_rows(); ++k) {
      auto src = g.row(k);
      for (std::size_t e = adj->offsets[k]; e < adj->offsets[k + 1]; ++e) {
        const double w = adj->coeffs[e];
        auto dst = gx.row(adj->cols[e]);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += w * src[c];
      }
    }
  });
}

Var pairwise_add(Var a, Var b) {
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  if (va.cols() != vb.cols()) {
    throw DimensionError(fmt::format("pairwise_add: widths {} and {} differ", va.cols(), vb.cols()));
  }
  const std::size_t m = va.rows(), n = vb.rows(), h = va.cols();
  Matrix out(n * m, h);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      auto dst = out.row(i * m + j);
      for (std::size_t c = 0; c < h; ++c) dst[c] = vb(i, c) + va(j, c);
    }
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib, m, n, h](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const bool da = t.needs_grad(ia), db = t.needs_grad(ib);
    Matrix* ga = da ? &t.grad_buffer(ia) : nullptr;
    Matrix* gb = db ? &t.grad_buffer(ib) : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        auto src = g.row(i * m + j);
        for (std::size_t c = 0; c < h; ++c) {
          if (ga) (*ga)(j, c) += src[c];
          if (gb) (*gb)(i, c) += src[c];
        }
      }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Matrix& va = a.value();
  if (rows * cols != va.size()) {
    throw DimensionError(fmt::format("reshape: {}x{} into {}x{}", va.rows(), va.cols(), rows, cols));
  }
  Matrix out(rows, cols, std::vector<double>(va.data().begin(), va.data().end()));
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
  });
}

Var row_sum(Var a) {
  const Matrix& va = a.value();
  Matrix out(va.rows(), 1);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    double s = 0.0;
    for (double x : va.row(r)) s += x;
    out(r, 0) = s;
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (auto& x : ga.row(r)) x += g(r, 0);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const auto ia = a.id();
  return a.tape().record(Matrix(1, 1, s), {a}, [ia](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)(0, 0);
    for (auto& x : t.grad_buffer(ia).data()) x += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var bce_with_logits(Var logits, std::span<const double> labels) {
  const Matrix& z = logits.value();
  if (z.size() != labels.size() || z.size() == 0) {
    throw DimensionError(fmt::format("bce_with_logits: {} logits vs {} labels", z.size(), labels.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    // -[y log s(x) + (1-y) log(1-s(x))] = softplus(x) - y x
    total += softplus(x) - labels[i] * x;
  }
  const double n = static_cast<double>(z.size());
  std::vector<double> y(labels.begin(), labels.end());
  const auto iz = logits.id();
  return logits.tape().record(Matrix(1, 1, total / n), {logits}, [iz, n, y = std::move(y)](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)(0, 0);
    const Matrix& z = t.value(iz);
    Matrix& gz = t.grad_buffer(iz);
    for (std::size_t i = 0; i < y.size(); ++i) gz.data()[i] += g * (logistic(z.data()[i]) - y[i]) / n;
  });
}

Var fc_forward(Var weights, Var bias, Var input, Activation activation) {
  const Matrix& w = weights.value();
  const Matrix& b = bias.value();
  if (input.value().cols() != w.cols() || b.rows() != 1 || b.cols() != w.rows()) {
    throw DimensionError(fmt::format("fc_forward: input {}x{}, weights {}x{}, bias {}x{}", input.value().rows(),
                                     input.value().cols(), w.rows(), w.cols(), b.rows(), b.cols()));
  }
  return activate(add_row(matmul_bt(input, weights), bias), activation);
}

}  // namespace kcse
