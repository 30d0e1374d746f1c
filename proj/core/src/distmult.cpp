#include "kcse/distmult.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/rng.hpp"

namespace kcse {

std::string RelationDiagonals::param_name(std::string_view relation) const {
  return fmt::format("distmult.R.{}", relation);
}

void RelationDiagonals::init_params(ParamStore& params, Rng& rng) const {
  for (const auto& rel : relations_.names()) params.add(param_name(rel), uniform_matrix(1, dim_, -1.0, 1.0, rng));
}

void RelationDiagonals::check_params(const ParamStore& params) const {
  for (const auto& rel : relations_.names()) {
    const auto name = param_name(rel);
    if (!params.contains(name)) throw DimensionError(fmt::format("checkpoint lacks parameter '{}'", name));
    const auto& v = params.value(name);
    if (v.rows() != 1 || v.cols() != dim_) {
      throw DimensionError(fmt::format("parameter '{}' is {}x{}, decoder expects 1x{}", name, v.rows(), v.cols(), dim_));
    }
  }
}

Var RelationDiagonals::stacked(Tape& tape, ParamStore& params) const {
  std::vector<Var> rows;
  rows.reserve(relations_.size());
  for (const auto& rel : relations_.names()) rows.push_back(tape.param(params, param_name(rel)));
  return concat_rows(rows);
}

double triple_logit(std::span<const double> head, std::span<const double> relation, std::span<const double> tail) {
  if (head.size() != relation.size() || tail.size() != relation.size()) {
    throw DimensionError(fmt::format("DistMult: head {}, relation {}, tail {} dimensions", head.size(),
                                     relation.size(), tail.size()));
  }
  double s = 0.0;
  // head * tail first: the product commutes exactly, so swapping head and
  // tail gives a bit-identical score.
  for (std::size_t k = 0; k < head.size(); ++k) s += (head[k] * tail[k]) * relation[k];
  return s;
}

double score_triple(std::span<const double> head, std::span<const double> relation, std::span<const double> tail) {
  const double z = triple_logit(head, relation, tail);
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Var distmult_logits(Var embeddings, Var diagonals, std::span<const std::uint32_t> heads,
                    std::span<const std::uint32_t> relations, std::span<const std::uint32_t> tails) {
  if (heads.size() != relations.size() || tails.size() != relations.size()) {
    throw DimensionError("distmult_logits: index lists differ in length");
  }
  if (embeddings.cols() != diagonals.cols()) {
    throw DimensionError(fmt::format("distmult_logits: embeddings are {}-d, diagonals {}-d", embeddings.cols(),
                                     diagonals.cols()));
  }
  const Var h = gather_rows(embeddings, heads);
  const Var r = gather_rows(diagonals, relations);
  const Var t = gather_rows(embeddings, tails);
  return row_sum(mul(mul(h, t), r));
}

}  // namespace kcse
