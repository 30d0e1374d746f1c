#pragma once

// Seeded graph and model fixtures shared by unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "kcse/knowledge_graph.hpp"
#include "kcse/rng.hpp"

namespace fixtures {

/// Random multigraph: `nodes` concepts, `relations` relation types, about
/// `edges` draws of (head, relation, tail) with random weights; duplicates
/// collapse, self-loops allowed.
inline kcse::KnowledgeGraph random_graph(std::uint64_t seed, std::size_t nodes, std::size_t relations,
                                         std::size_t edges) {
  kcse::Rng rng = kcse::Rng::stream(seed, "fixture-graph");
  kcse::GraphBuilder b;
  for (std::size_t i = 0; i < nodes; ++i) b.add_concept(fmt::format("n{}", i));
  for (std::size_t r = 0; r < relations; ++r) b.add_relation(fmt::format("rel{}", r));
  for (std::size_t e = 0; e < edges; ++e) {
    const auto h = static_cast<std::uint32_t>(rng.uniform_index(nodes));
    const auto t = static_cast<std::uint32_t>(rng.uniform_index(nodes));
    const auto r = static_cast<std::uint32_t>(rng.uniform_index(relations));
    b.add_edge(kcse::ConceptId{h}, kcse::RelationId{r}, kcse::ConceptId{t}, 0.25 * static_cast<double>(rng.uniform_index(8)));
  }
  return std::move(b).build();
}

/// Two-sided graph with planted block structure: 30 + 30 nodes, five
/// clusters per side; `r1` links side-A cluster i to side-B cluster i and
/// `r2` links side-B cluster i to side-A cluster i+1, each pair with
/// probability 0.6. Edges are shuffled and split 80/20.
struct PlantedGraph {
  kcse::KnowledgeGraph train;  // the 80 %; vocabulary covers every node
  std::vector<kcse::Triple> held_out;
  std::vector<kcse::Triple> all_edges;  // ids of `train`'s vocabulary
};

inline PlantedGraph planted_bipartite(std::uint64_t seed) {
  constexpr int side = 30, clusters = 5;
  constexpr double density = 0.6;
  kcse::Rng rng = kcse::Rng::stream(seed, "planted");
  kcse::GraphBuilder b;
  for (int i = 0; i < 2 * side; ++i) b.add_concept(fmt::format("{}{}", i < side ? "a" : "b", i % side));
  b.add_relation("r1");
  b.add_relation("r2");
  const auto cluster = [](int i) { return (i % side) % clusters; };
  std::vector<kcse::Triple> edges;
  for (int a = 0; a < side; ++a) {
    for (int c = side; c < 2 * side; ++c) {
      const kcse::ConceptId ia{static_cast<std::uint32_t>(a)}, ic{static_cast<std::uint32_t>(c)};
      if (cluster(a) == cluster(c) && rng.uniform() < density) edges.push_back({ia, kcse::RelationId{0}, ic});
      if ((cluster(c) + 1) % clusters == cluster(a) && rng.uniform() < density) {
        edges.push_back({ic, kcse::RelationId{1}, ia});
      }
    }
  }
  for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng.uniform_index(i)]);
  const std::size_t n_held = edges.size() / 5;
  PlantedGraph out;
  out.all_edges = edges;
  out.held_out.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_held));
  for (std::size_t i = n_held; i < edges.size(); ++i) b.add_edge(edges[i].head, edges[i].relation, edges[i].tail);
  out.train = std::move(b).build();
  return out;
}

/// The five-node, three-relation graph used for gradient checks.
inline kcse::KnowledgeGraph tiny_graph() {
  kcse::GraphBuilder b;
  b.add_edge("a", "r1", "b");
  b.add_edge("b", "r2", "c");
  b.add_edge("c", "r3", "d");
  b.add_edge("d", "r1", "e");
  b.add_edge("a", "r2", "e");
  b.add_edge("e", "r3", "a");
  b.add_edge("b", "r1", "b");
  b.add_edge("a", "r1", "c");
  return std::move(b).build();
}

/// Fresh directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("kcse-test-{}", name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
