#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kcse/vocabulary.hpp"

namespace kcse {

struct ConceptId {
  std::uint32_t value = 0;
  friend auto operator<=>(ConceptId, ConceptId) = default;
};

struct RelationId {
  std::uint32_t value = 0;
  friend auto operator<=>(RelationId, RelationId) = default;
};

struct Triple {
  ConceptId head;
  RelationId relation;
  ConceptId tail;
  double weight = 1.0;
};

enum class Direction { in, out, both };

/// Directed, relation-labelled multigraph over interned concepts.
///
/// Edges keep the order in which they were first added. Adding an edge
/// whose (head, relation, tail) already exists keeps the larger weight and
/// the original position. The graph is immutable once built; use
/// GraphBuilder to construct one.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  const Vocabulary& concepts() const { return concepts_; }
  const Vocabulary& relations() const { return relations_; }
  std::span<const Triple> edges() const { return edges_; }

  std::size_t num_concepts() const { return concepts_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::string& concept_name(ConceptId id) const { return concepts_.name(id.value); }
  const std::string& relation_name(RelationId id) const { return relations_.name(id.value); }

  std::optional<ConceptId> find_concept(std::string_view normalized_name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  /// Neighbours of `node` under `relation`. For `in` these are the heads of
  /// edges ending at `node`; for `out` the tails of edges leaving it. The
  /// order follows the edge list.
  std::span<const ConceptId> neighbors(ConceptId node, RelationId relation, Direction direction) const;

  /// Number of neighbours under `relation`. For `both`, a self-loop is
  /// counted once.
  std::size_t degree(ConceptId node, RelationId relation, Direction direction) const;

  /// Every neighbour of `node` over all relations, ignoring direction. May
  /// contain repeats.
  std::span<const ConceptId> undirected_neighbors(ConceptId node) const;

 private:
  friend class GraphBuilder;

  void build_adjacency();
  void check_ids(ConceptId node, RelationId relation) const;

  Vocabulary concepts_;
  Vocabulary relations_;
  std::vector<Triple> edges_;

  // Per-node CSR; inside a node's block entries are stably sorted by
  // relation so a (node, relation) lookup is a binary search.
  struct Adjacency {
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> relations;
    std::vector<ConceptId> nodes;
    std::span<const ConceptId> lookup(ConceptId node, RelationId relation) const;
  };
  Adjacency out_;
  Adjacency in_;
  std::vector<std::size_t> undirected_offsets_;
  std::vector<ConceptId> undirected_targets_;
};

/// Accumulates concepts, relations and edges, then freezes them into a
/// KnowledgeGraph.
class GraphBuilder {
 public:
  ConceptId add_concept(std::string_view normalized_name);
  RelationId add_relation(std::string_view name);
  void add_edge(ConceptId head, RelationId relation, ConceptId tail, double weight = 1.0);
  void add_edge(std::string_view head, std::string_view relation, std::string_view tail, double weight = 1.0);

  std::size_t num_edges() const { return graph_.edges_.size(); }

  KnowledgeGraph build() &&;

 private:
  struct TripleKeyHash {
    std::size_t operator()(const std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>& k) const;
  };
  KnowledgeGraph graph_;
  std::unordered_map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::size_t, TripleKeyHash> index_;
};

}  // namespace kcse
