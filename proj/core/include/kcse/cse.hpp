#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcse/embedding_table.hpp"
#include "kcse/kg_trainer.hpp"

namespace kcse {

/// Subgraph radius for per-class extraction. Radius 2 keeps every edge
/// touching a node within one hop of the class, which is everything a
/// two-layer encoder reads (including the neighbour counts of those nodes).
inline constexpr int kCseRadius = 2;

enum class ExtractionPath {
  full_graph,  // one encode of the whole graph, rows selected per class
  per_class,   // encode each class's own radius-2 subgraph
};

ExtractionPath parse_extraction_path(std::string_view tag);
std::string_view to_string(ExtractionPath path);

/// Up to `k` concept names closest to `name` by edit distance (ties by
/// vocabulary order).
std::vector<std::string> nearest_concepts(const KnowledgeGraph& graph, std::string_view name, std::size_t k = 3);

/// Embedding of one class: encodes the radius-`radius` subgraph around the
/// class concept with the trained encoder and returns the class row.
/// Throws DataError (with suggestions) when the class is not a concept;
/// warns when it has no edges.
std::vector<double> extract_cse(const GraphAutoencoder& model, const KnowledgeGraph& graph,
                                std::string_view class_name, int radius = kCseRadius);

/// One row per class name, in the given order. Every missing class is
/// reported in a single DataError. `threads` only affects the per-class
/// path.
EmbeddingTable extract_all(const GraphAutoencoder& model, const KnowledgeGraph& graph,
                           std::span<const std::string> class_names, ExtractionPath path = ExtractionPath::full_graph,
                           std::size_t threads = 1);

}  // namespace kcse
