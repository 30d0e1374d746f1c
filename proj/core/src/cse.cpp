#include "kcse/cse.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "kcse/error.hpp"
#include "kcse/parallel.hpp"
#include "kcse/subgraph.hpp"
#include "kcse/text.hpp"

namespace kcse {

ExtractionPath parse_extraction_path(std::string_view tag) {
  if (tag == "full-graph") return ExtractionPath::full_graph;
  if (tag == "per-class") return ExtractionPath::per_class;
  throw UsageError(fmt::format("unknown extraction path '{}' (expected full-graph or per-class)", tag));
}

std::string_view to_string(ExtractionPath path) {
  return path == ExtractionPath::full_graph ? "full-graph" : "per-class";
}

std::vector<std::string> nearest_concepts(const KnowledgeGraph& graph, std::string_view name, std::size_t k) {
  const auto& names = graph.concepts().names();
  std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (distance, id)
  ranked.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) ranked.emplace_back(edit_distance(name, names[i]), i);
  const auto take = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(names[ranked[i].second]);
  return out;
}

namespace {

std::string missing_message(const KnowledgeGraph& graph, std::span<const std::string> missing) {
  std::vector<std::string> parts;
  for (const auto& name : missing) {
    const auto near = nearest_concepts(graph, name);
    parts.push_back(near.empty() ? name : fmt::format("{} (did you mean: {}?)", name, fmt::join(near, ", ")));
  }
  return fmt::format("{} class(es) not found in the graph: {}", missing.size(), fmt::join(parts, "; "));
}

}  // namespace

std::vector<double> extract_cse(const GraphAutoencoder& model, const KnowledgeGraph& graph,
                                std::string_view class_name, int radius) {
  const std::string key = normalize_concept(class_name);
  const auto id = graph.find_concept(key);
  if (!id) {
    const std::string names[] = {key};
    throw DataError(missing_message(graph, names));
  }
  if (graph.undirected_neighbors(*id).empty()) {
    spdlog::warn("class '{}' has no edges; its embedding depends only on its own features", key);
  }
  const std::string seeds[] = {key};
  const auto sub = neighborhood_subgraph(graph, seeds, radius);
  const Matrix h = encode(sub.graph, model.encoder, model.params);
  const auto row = h.row(sub.graph.find_concept(key)->value);
  return {row.begin(), row.end()};
}

EmbeddingTable extract_all(const GraphAutoencoder& model, const KnowledgeGraph& graph,
                           std::span<const std::string> class_names, ExtractionPath path, std::size_t threads) {
  std::vector<std::string> keys, missing;
  for (const auto& name : class_names) {
    keys.push_back(normalize_concept(name));
    if (!graph.find_concept(keys.back())) missing.push_back(keys.back());
  }
  if (!missing.empty()) throw DataError(missing_message(graph, missing));

  const std::size_t dim = model.encoder.dims().output;
  std::vector<std::vector<double>> rows(keys.size());
  if (path == ExtractionPath::full_graph) {
    const Matrix h = encode(graph, model.encoder, model.params);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto id = *graph.find_concept(keys[i]);
      if (graph.undirected_neighbors(id).empty()) {
        spdlog::warn("class '{}' has no edges; its embedding depends only on its own features", keys[i]);
      }
      const auto row = h.row(id.value);
      rows[i].assign(row.begin(), row.end());
    }
  } else {
    parallel_for(keys.size(), threads, [&](std::size_t i) { rows[i] = extract_cse(model, graph, keys[i]); });
  }
  EmbeddingTable table(dim);
  for (std::size_t i = 0; i < keys.size(); ++i) table.add(keys[i], rows[i]);
  return table;
}

}  // namespace kcse
