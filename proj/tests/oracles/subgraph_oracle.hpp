#pragma once

// Brute-force radius subgraph: all-pairs undirected hop distances by
// Floyd-Warshall, then the edge membership rule applied to every triple.

#include <algorithm>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "kcse/knowledge_graph.hpp"

namespace oracle {

using NamedEdge = std::tuple<std::string, std::string, std::string, double>;  // rel, head, tail, weight

inline std::vector<std::vector<int>> all_pairs_hops(const kcse::KnowledgeGraph& g) {
  const std::size_t n = g.num_concepts();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : g.edges()) {
    if (e.head == e.tail) continue;
    d[e.head.value][e.tail.value] = std::min(d[e.head.value][e.tail.value], 1);
    d[e.tail.value][e.head.value] = std::min(d[e.tail.value][e.head.value], 1);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

struct SubgraphExpectation {
  std::multiset<NamedEdge> edges;
  std::set<std::string> nodes;
};

inline SubgraphExpectation brute_force_subgraph(const kcse::KnowledgeGraph& g, const std::vector<std::string>& seeds,
                                                int radius) {
  const auto d = all_pairs_hops(g);
  std::vector<int> dist(g.num_concepts(), std::numeric_limits<int>::max() / 4);
  SubgraphExpectation out;
  for (const auto& s : seeds) {
    const auto id = g.find_concept(s);
    if (!id) continue;
    out.nodes.insert(s);
    for (std::size_t v = 0; v < g.num_concepts(); ++v) dist[v] = std::min(dist[v], d[id->value][v]);
  }
  for (const auto& e : g.edges()) {
    if (std::min(dist[e.head.value], dist[e.tail.value]) < radius) {
      out.edges.emplace(g.relation_name(e.relation), g.concept_name(e.head), g.concept_name(e.tail), e.weight);
      out.nodes.insert(g.concept_name(e.head));
      out.nodes.insert(g.concept_name(e.tail));
    }
  }
  return out;
}

inline std::multiset<NamedEdge> named_edges(const kcse::KnowledgeGraph& g) {
  std::multiset<NamedEdge> out;
  for (const auto& e : g.edges()) {
    out.emplace(g.relation_name(e.relation), g.concept_name(e.head), g.concept_name(e.tail), e.weight);
  }
  return out;
}

inline std::set<std::string> node_names(const kcse::KnowledgeGraph& g) {
  return {g.concepts().names().begin(), g.concepts().names().end()};
}

}  // namespace oracle
