#include "kcse/subgraph.hpp"

#include <deque>

#include <spdlog/spdlog.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse {

std::vector<int> seed_distances(const KnowledgeGraph& graph, std::span<const ConceptId> seeds, int max_depth) {
  std::vector<int> dist(graph.num_concepts(), -1);
  std::deque<ConceptId> frontier;
  for (auto s : seeds) {
    if (dist[s.value] != 0) {
      dist[s.value] = 0;
      frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop_front();
    if (dist[v.value] >= max_depth) continue;
    for (auto u : graph.undirected_neighbors(v)) {
      if (dist[u.value] < 0) {
        dist[u.value] = dist[v.value] + 1;
        frontier.push_back(u);
      }
    }
  }
  return dist;
}

SubgraphResult neighborhood_subgraph(const KnowledgeGraph& graph, std::span<const std::string> seeds, int radius) {
  if (radius < 0) throw UsageError("radius must be non-negative");
  SubgraphResult result;
  std::vector<ConceptId> found;
  for (const auto& raw : seeds) {
    const auto name = normalize_concept(raw);
    if (auto id = graph.find_concept(name)) {
      found.push_back(*id);
    } else {
      result.missing_seeds.push_back(name);
    }
  }
  if (!result.missing_seeds.empty()) {
    spdlog::warn("{} seed(s) not present in the graph; first: '{}'", result.missing_seeds.size(),
                 result.missing_seeds.front());
  }

  GraphBuilder builder;
  if (radius > 0) {
    const auto dist = seed_distances(graph, found, radius - 1);
    const auto near = [&](ConceptId c) { return dist[c.value] >= 0 && dist[c.value] < radius; };
    for (const auto& e : graph.edges()) {
      if (!near(e.head) && !near(e.tail)) continue;
      const auto h = builder.add_concept(graph.concept_name(e.head));
      const auto r = builder.add_relation(graph.relation_name(e.relation));
      const auto t = builder.add_concept(graph.concept_name(e.tail));
      builder.add_edge(h, r, t, e.weight);
    }
  }
  for (auto s : found) builder.add_concept(graph.concept_name(s));
  result.graph = std::move(builder).build();
  return result;
}

}  // namespace kcse
