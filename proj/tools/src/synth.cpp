#include "kcse_app/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "kcse/edge_io.hpp"
#include "kcse/error.hpp"
#include "kcse/rng.hpp"

namespace kcse::app {

namespace {

// Pipeline settings that train in seconds on these graphs; the defaults
// target ConceptNet-sized inputs.
constexpr std::string_view kSmallPipeline = R"([kg]
input_dim = 32
hidden_dim = 32
output_dim = 32
epochs = 300

[zsl]
hidden_width = 64
relation_width = 64
fusion_semantic_width = 64
fusion_secondary_width = 64
learning_rate = 0.001
)";

std::vector<SynthScenario> make_scenarios() {
  std::vector<SynthScenario> out;
  SynthScenario s;
  s.name = "separable";
  s.seen_classes = 20;
  s.unseen_classes = 5;
  s.images_per_seen = 100;
  s.images_per_unseen = 50;
  s.attribute_dim = 10;
  s.visual_dim = 32;
  s.word_dim = 16;
  s.groups = 4;
  s.cluster_spread = 0.05;
  s.recommended_config = std::string(kSmallPipeline);
  out.push_back(s);

  s.name = "degraded-attributes";
  s.attribute_noise = 0.6;
  out.push_back(s);

  s.name = "animals-shape";
  s.seen_classes = 40;
  s.unseen_classes = 10;
  s.images_per_seen = 30;
  s.images_per_unseen = 20;
  s.attribute_dim = 85;
  s.visual_dim = 64;
  s.word_dim = 32;
  s.groups = 8;
  s.attribute_noise = 0.0;
  out.push_back(s);

  s.name = "apy-shape";
  s.seen_classes = 20;
  s.unseen_classes = 12;
  s.attribute_dim = 64;
  s.groups = 6;
  out.push_back(s);
  return out;
}

const std::vector<SynthScenario>& scenarios() {
  static const auto table = make_scenarios();
  return table;
}

std::size_t hamming(std::span<const double> a, std::span<const double> b) {
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k] ? 1 : 0;
  return d;
}

}  // namespace

const SynthScenario& synth_scenario(std::string_view name) {
  for (const auto& s : scenarios()) {
    if (s.name == name) return s;
  }
  throw UsageError(fmt::format("unknown scenario '{}' (expected one of: separable, degraded-attributes, "
                               "animals-shape, apy-shape)",
                               name));
}

std::vector<std::string> synth_scenario_names() {
  std::vector<std::string> out;
  for (const auto& s : scenarios()) out.push_back(s.name);
  return out;
}

SynthData generate_synth(const SynthScenario& sc, std::uint64_t seed) {
  const std::size_t n = sc.seen_classes + sc.unseen_classes;
  const std::size_t a = sc.attribute_dim;
  SynthData data;
  for (std::size_t c = 0; c < n; ++c) {
    (c < sc.seen_classes ? data.split.seen : data.split.unseen).push_back(fmt::format("class_{:02}", c));
  }
  const auto names = data.split.all();

  // Binary attribute codes, pairwise Hamming distance >= 2, >= 2 bits set.
  Rng attr_rng = Rng::stream(seed, "synth:attributes");
  data.true_attributes = Matrix(n, a);
  for (std::size_t c = 0; c < n; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DataError("could not draw distinct attribute codes");
      auto row = data.true_attributes.row(c);
      for (auto& v : row) v = attr_rng.uniform() < 0.5 ? 1.0 : 0.0;
      if (std::count(row.begin(), row.end(), 1.0) < 2) continue;
      bool distinct = true;
      for (std::size_t p = 0; p < c && distinct; ++p) distinct = hamming(row, data.true_attributes.row(p)) >= 2;
      if (distinct) break;
    }
  }

  Rng noise_rng = Rng::stream(seed, "synth:attribute-noise");
  data.attributes = EmbeddingTable(a);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> row(data.true_attributes.row(c).begin(), data.true_attributes.row(c).end());
    if (sc.attribute_noise > 0.0) {
      for (auto& v : row) v += noise_rng.normal(0.0, sc.attribute_noise);
    }
    data.attributes.add(names[c], row);
  }

  Rng word_rng = Rng::stream(seed, "synth:words");
  Matrix word_map(sc.word_dim, a);
  for (auto& v : word_map.data()) v = word_rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(a)));
  data.word_vectors = EmbeddingTable(sc.word_dim);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> row(sc.word_dim);
    for (std::size_t k = 0; k < sc.word_dim; ++k) {
      double v = 0.0;
      for (std::size_t j = 0; j < a; ++j) v += word_map(k, j) * data.true_attributes(c, j);
      row[k] = v + word_rng.normal(0.0, 0.1);
    }
    data.word_vectors.add(names[c], row);
  }

  // Visual cluster means: a fixed non-negative linear image of the codes.
  Rng visual_rng = Rng::stream(seed, "synth:visual");
  Matrix visual_map(sc.visual_dim, a);
  for (auto& v : visual_map.data()) v = visual_rng.uniform();
  Matrix means(n, sc.visual_dim);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < sc.visual_dim; ++k) {
      double v = 0.0;
      for (std::size_t j = 0; j < a; ++j) v += visual_map(k, j) * data.true_attributes(c, j);
      means(c, k) = v;
    }
  }
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < sc.visual_dim; ++k) d2 += (means(c, k) - means(p, k)) * (means(c, k) - means(p, k));
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  const double sigma = sc.cluster_spread * min_dist;

  const std::size_t images = sc.seen_classes * sc.images_per_seen + sc.unseen_classes * sc.images_per_unseen;
  data.visual.features = Matrix(images, sc.visual_dim);
  std::size_t row = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t count = c < sc.seen_classes ? sc.images_per_seen : sc.images_per_unseen;
    for (std::size_t i = 0; i < count; ++i, ++row) {
      data.visual.image_ids.push_back(fmt::format("img_{:05}", row));
      data.visual.labels.push_back(names[c]);
      for (std::size_t k = 0; k < sc.visual_dim; ++k) {
        data.visual.features(row, k) = means(c, k) + visual_rng.normal(0.0, sigma);
      }
    }
  }

  // Graph: classes carry their true attributes; categories group classes
  // by their first attribute bits; each class is related to its nearest
  // seen classes.
  Rng graph_rng = Rng::stream(seed, "synth:graph");
  GraphBuilder builder;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < a; ++j) {
      if (data.true_attributes(c, j) == 1.0) builder.add_edge(names[c], "HasProperty", fmt::format("attr_{:02}", j));
    }
    const std::size_t group = static_cast<std::size_t>(graph_rng.uniform_index(sc.groups));
    builder.add_edge(names[c], "IsA", fmt::format("group_{}", group));
    std::size_t best = n, best_d = std::numeric_limits<std::size_t>::max();
    for (std::size_t p = 0; p < sc.seen_classes; ++p) {
      if (p == c) continue;
      const auto d = hamming(data.true_attributes.row(c), data.true_attributes.row(p));
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    if (best < n) builder.add_edge(names[c], "RelatedTo", names[best]);
  }
  for (std::size_t g = 0; g < sc.groups; ++g) builder.add_edge(fmt::format("group_{}", g), "IsA", "thing");
  data.graph = std::move(builder).build();
  return data;
}

void write_synth(const SynthData& data, const SynthScenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edge_file(data.graph, dir / "graph.tsv");
  save_split(dir / "split.txt", data.split);
  save_embedding_table(dir / "attributes.txt", data.attributes);
  save_embedding_table(dir / "word_vectors.txt", data.word_vectors);
  save_visual_text(dir / "visual.txt", data.visual);
  {
    std::ofstream seeds(dir / "seeds.txt");
    for (const auto& name : data.split.all()) seeds << name << '\n';
    if (!seeds) throw DataError(fmt::format("cannot write '{}'", (dir / "seeds.txt").string()));
  }
  std::ofstream conf(dir / "kcse.conf");
  conf << "# scenario " << scenario.name << "\n"
       << "[data]\n"
       << "graph = graph.tsv\n"
       << "seeds = seeds.txt\n"
       << "split = split.txt\n"
       << "visual = visual.txt\n"
       << "attributes = attributes.txt\n"
       << "word_vectors = word_vectors.txt\n"
       << "cse = cse.txt\n"
       << "checkpoint = kg.params\n"
       << "zsl_checkpoint = zsl.params\n\n"
       << scenario.recommended_config;
  if (!conf) throw DataError(fmt::format("cannot write '{}'", (dir / "kcse.conf").string()));
}

}  // namespace kcse::app
