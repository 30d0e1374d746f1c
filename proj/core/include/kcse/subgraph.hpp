#pragma once

#include <span>
#include <string>
#include <vector>

#include "kcse/knowledge_graph.hpp"

namespace kcse {

struct SubgraphResult {
  KnowledgeGraph graph;
  std::vector<std::string> missing_seeds;
};

/// Undirected hop distance from the nearest seed, or -1 if unreachable
/// within `max_depth` hops.
std::vector<int> seed_distances(const KnowledgeGraph& graph, std::span<const ConceptId> seeds, int max_depth);

/// Keeps every edge with at least one endpoint strictly closer than `radius`
/// undirected hops to a seed, plus the seeds themselves.
///
/// Seeds are normalized before lookup; seeds absent from the graph are
/// reported in `missing_seeds` and logged. Kept edges preserve their
/// relative order; concepts and relations are re-interned in first-use order
/// with isolated seeds appended last.
SubgraphResult neighborhood_subgraph(const KnowledgeGraph& graph, std::span<const std::string> seeds, int radius);

}  // namespace kcse
