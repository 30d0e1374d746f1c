#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kcse/dataset.hpp"
#include "kcse/embedding_table.hpp"
#include "kcse/knowledge_graph.hpp"
#include "kcse/matrix.hpp"

namespace kcse::app {

/// Shape and noise settings of a synthetic benchmark.
struct SynthScenario {
  std::string name;
  std::size_t seen_classes = 0;
  std::size_t unseen_classes = 0;
  std::size_t images_per_seen = 0;
  std::size_t images_per_unseen = 0;
  std::size_t attribute_dim = 0;
  std::size_t visual_dim = 0;
  std::size_t word_dim = 0;
  std::size_t groups = 0;  // latent category nodes in the graph
  /// Std-dev of per-class Gaussian noise added to the published attributes
  /// (0 = attributes are exact).
  double attribute_noise = 0.0;
  /// Cluster std-dev as a fraction of the smallest distance between two
  /// class means.
  double cluster_spread = 0.1;
  /// Settings written to the generated kcse.conf (config-file syntax).
  std::string recommended_config;
};

/// Throws UsageError for anything other than separable,
/// degraded-attributes, animals-shape or apy-shape.
const SynthScenario& synth_scenario(std::string_view name);
std::vector<std::string> synth_scenario_names();

struct SynthData {
  ClassManifest split;
  Matrix true_attributes;    // classes x attribute_dim, 0/1, manifest order
  EmbeddingTable attributes; // published (possibly noisy)
  EmbeddingTable word_vectors;
  VisualSet visual;          // seen images first, then unseen
  KnowledgeGraph graph;
};

/// Deterministic in (scenario, seed).
SynthData generate_synth(const SynthScenario& scenario, std::uint64_t seed);

/// Writes graph.tsv, seeds.txt, split.txt, attributes.txt,
/// word_vectors.txt, visual.txt and kcse.conf into `dir`.
void write_synth(const SynthData& data, const SynthScenario& scenario, const std::filesystem::path& dir);

}  // namespace kcse::app
