#pragma once

#include <span>
#include <string>
#include <vector>

#include "kcse/autodiff.hpp"
#include "kcse/knowledge_graph.hpp"
#include "kcse/vocabulary.hpp"

namespace kcse {

class Rng;

/// Diagonal bilinear relation scores. One 1 x d diagonal per original
/// relation, stored as `distmult.R.<relation>`.
class RelationDiagonals {
 public:
  RelationDiagonals() = default;
  RelationDiagonals(Vocabulary relations, std::size_t dim) : relations_(std::move(relations)), dim_(dim) {}

  const Vocabulary& relations() const { return relations_; }
  std::size_t dim() const { return dim_; }
  std::string param_name(std::string_view relation) const;

  /// Diagonals start uniform in (-1, 1); a positive start lets the
  /// non-negative encoder outputs collapse to zero to push negatives down.
  void init_params(ParamStore& params, Rng& rng) const;
  void check_params(const ParamStore& params) const;

  /// Stacked diagonals (relations x d) in vocabulary order.
  Var stacked(Tape& tape, ParamStore& params) const;

 private:
  Vocabulary relations_;
  std::size_t dim_ = 0;
};

/// Raw bilinear form sum_k h[k] r[k] t[k].
double triple_logit(std::span<const double> head, std::span<const double> relation, std::span<const double> tail);

/// sigmoid(triple_logit(...)), strictly inside (0, 1) for moderate inputs.
double score_triple(std::span<const double> head, std::span<const double> relation, std::span<const double> tail);

/// Logits for a batch of (head row, relation row, tail row) index triples:
/// embeddings is nodes x d, diagonals relations x d. Returns batch x 1.
Var distmult_logits(Var embeddings, Var diagonals, std::span<const std::uint32_t> heads,
                    std::span<const std::uint32_t> relations, std::span<const std::uint32_t> tails);

}  // namespace kcse
