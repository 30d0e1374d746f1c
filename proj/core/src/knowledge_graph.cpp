#include "kcse/knowledge_graph.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "kcse/error.hpp"

namespace kcse {

std::optional<ConceptId> KnowledgeGraph::find_concept(std::string_view normalized_name) const {
  if (auto id = concepts_.find(normalized_name)) return ConceptId{*id};
  return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
  if (auto id = relations_.find(name)) return RelationId{*id};
  return std::nullopt;
}

std::span<const ConceptId> KnowledgeGraph::Adjacency::lookup(ConceptId node, RelationId relation) const {
  const std::size_t begin = offsets[node.value];
  const std::size_t end = offsets[node.value + 1];
  const auto first = relations.begin() + static_cast<std::ptrdiff_t>(begin);
  const auto last = relations.begin() + static_cast<std::ptrdiff_t>(end);
  const auto [lo, hi] = std::equal_range(first, last, relation.value);
  return {nodes.data() + (lo - relations.begin()), static_cast<std::size_t>(hi - lo)};
}

void KnowledgeGraph::check_ids(ConceptId node, RelationId relation) const {
  if (node.value >= concepts_.size()) {
    throw UsageError(fmt::format("concept id {} out of range ({} concepts)", node.value, concepts_.size()));
  }
  if (relation.value >= relations_.size()) {
    throw UsageError(fmt::format("relation id {} out of range ({} relations)", relation.value, relations_.size()));
  }
}

std::span<const ConceptId> KnowledgeGraph::neighbors(ConceptId node, RelationId relation, Direction direction) const {
  check_ids(node, relation);
  switch (direction) {
    case Direction::in:
      return in_.lookup(node, relation);
    case Direction::out:
      return out_.lookup(node, relation);
    case Direction::both:
      break;
  }
  throw UsageError("neighbors() needs a single direction; use degree() for Direction::both");
}

std::size_t KnowledgeGraph::degree(ConceptId node, RelationId relation, Direction direction) const {
  check_ids(node, relation);
  if (direction != Direction::both) return neighbors(node, relation, direction).size();
  const auto in = in_.lookup(node, relation);
  const auto out = out_.lookup(node, relation);
  const auto loops = static_cast<std::size_t>(std::count(out.begin(), out.end(), node));
  return in.size() + out.size() - loops;
}

std::span<const ConceptId> KnowledgeGraph::undirected_neighbors(ConceptId node) const {
  if (node.value >= concepts_.size()) {
    throw UsageError(fmt::format("concept id {} out of range ({} concepts)", node.value, concepts_.size()));
  }
  const std::size_t begin = undirected_offsets_[node.value];
  return {undirected_targets_.data() + begin, undirected_offsets_[node.value + 1] - begin};
}

void KnowledgeGraph::build_adjacency() {
  const std::size_t n = concepts_.size();

  const auto build = [&](Adjacency& adj, bool outgoing) {
    adj.offsets.assign(n + 1, 0);
    for (const auto& e : edges_) ++adj.offsets[(outgoing ? e.head : e.tail).value + 1];
    std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
    adj.relations.resize(edges_.size());
    adj.nodes.resize(edges_.size());
    std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& e : edges_) {
      const auto owner = outgoing ? e.head : e.tail;
      const std::size_t slot = cursor[owner.value]++;
      adj.relations[slot] = e.relation.value;
      adj.nodes[slot] = outgoing ? e.tail : e.head;
    }
    // Stable sort each node block by relation, keeping edge order within it.
    std::vector<std::size_t> perm;
    std::vector<std::uint32_t> rel_tmp;
    std::vector<ConceptId> node_tmp;
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t b = adj.offsets[v], e = adj.offsets[v + 1];
      if (e - b < 2) continue;
      perm.resize(e - b);
      std::iota(perm.begin(), perm.end(), b);
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t x, std::size_t y) { return adj.relations[x] < adj.relations[y]; });
      rel_tmp.clear();
      node_tmp.clear();
      for (std::size_t p : perm) {
        rel_tmp.push_back(adj.relations[p]);
        node_tmp.push_back(adj.nodes[p]);
      }
      std::copy(rel_tmp.begin(), rel_tmp.end(), adj.relations.begin() + static_cast<std::ptrdiff_t>(b));
      std::copy(node_tmp.begin(), node_tmp.end(), adj.nodes.begin() + static_cast<std::ptrdiff_t>(b));
    }
  };
  build(out_, true);
  build(in_, false);

  undirected_offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++undirected_offsets_[e.head.value + 1];
    ++undirected_offsets_[e.tail.value + 1];
  }
  std::partial_sum(undirected_offsets_.begin(), undirected_offsets_.end(), undirected_offsets_.begin());
  undirected_targets_.resize(2 * edges_.size());
  std::vector<std::size_t> cursor(undirected_offsets_.begin(), undirected_offsets_.end() - 1);
  for (const auto& e : edges_) {
    undirected_targets_[cursor[e.head.value]++] = e.tail;
    undirected_targets_[cursor[e.tail.value]++] = e.head;
  }
}

std::size_t GraphBuilder::TripleKeyHash::operator()(
    const std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>& k) const {
  std::uint64_t h = std::get<0>(k);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<1>(k);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<2>(k);
  return static_cast<std::size_t>(h ^ (h >> 29));
}

ConceptId GraphBuilder::add_concept(std::string_view normalized_name) {
  return ConceptId{graph_.concepts_.intern(normalized_name)};
}

RelationId GraphBuilder::add_relation(std::string_view name) { return RelationId{graph_.relations_.intern(name)}; }

void GraphBuilder::add_edge(ConceptId head, RelationId relation, ConceptId tail, double weight) {
  if (head.value >= graph_.concepts_.size() || tail.value >= graph_.concepts_.size() ||
      relation.value >= graph_.relations_.size()) {
    throw UsageError("add_edge: id not interned in this builder");
  }
  if (!(weight >= 0.0)) throw DataError(fmt::format("edge weight must be non-negative, got {}", weight));
  const auto key = std::make_tuple(head.value, relation.value, tail.value);
  if (auto it = index_.find(key); it != index_.end()) {
    auto& existing = graph_.edges_[it->second];
    existing.weight = std::max(existing.weight, weight);
    return;
  }
  index_.emplace(key, graph_.edges_.size());
  graph_.edges_.push_back(Triple{head, relation, tail, weight});
}

void GraphBuilder::add_edge(std::string_view head, std::string_view relation, std::string_view tail, double weight) {
  const auto h = add_concept(head);
  const auto r = add_relation(relation);
  const auto t = add_concept(tail);
  add_edge(h, r, t, weight);
}

KnowledgeGraph GraphBuilder::build() && {
  graph_.build_adjacency();
  index_.clear();
  return std::move(graph_);
}

}  // namespace kcse
