#include "kcse_app/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "kcse/checkpoint.hpp"
#include "kcse/cse.hpp"
#include "kcse/edge_io.hpp"
#include "kcse/error.hpp"
#include "kcse/subgraph.hpp"
#include "kcse/text.hpp"
#include "kcse_app/synth.hpp"

namespace kcse::app {

namespace fs = std::filesystem;

namespace {

using Results = std::vector<std::pair<std::string, std::string>>;

fs::path out_dir(const RunConfig& config) {
  const fs::path dir = config.get("run.out_dir").empty() ? fs::path(".") : fs::path(config.get("run.out_dir"));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  return dir;
}

// Input paths are made absolute so a manifest can be replayed from any
// working directory.
RunConfig resolved(const RunConfig& config) {
  RunConfig out = config;
  for (const auto* key : {"data.graph", "data.seeds", "data.split", "data.visual", "data.attributes",
                          "data.word_vectors", "data.cse", "data.checkpoint", "data.zsl_checkpoint", "run.out_dir"}) {
    const auto& v = config.get(key);
    if (!v.empty()) out.set(key, fs::absolute(v).lexically_normal().string());
  }
  return out;
}

void write_manifest(const RunConfig& config, std::string_view command, const Results& results) {
  const fs::path path = out_dir(config) / fmt::format("{}.manifest", command);
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "# kcse " << command << " run; replay with: kcse " << command << " --config <this file>\n";
  resolved(config).write(out);
  out << "\n[result]\n";
  for (const auto& [key, value] : results) out << key << " = " << value << '\n';
}

void write_lines(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  for (double v : values) out << format_double(v) << '\n';
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

KnowledgeGraph load_graph(const RunConfig& config, ParseStats* stats = nullptr) {
  const auto format = parse_edge_format(config.get("data.graph_format"));
  std::optional<std::string> language;
  if (!config.get("data.language").empty()) language = config.get("data.language");
  return parse_edge_file(config.path("data.graph"), format, language, stats);
}

std::string graph_summary(const KnowledgeGraph& g) {
  return fmt::format("nodes={} relations={} edges={}", g.num_concepts(), g.num_relations(), g.num_edges());
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  ParseStats stats;
  const auto graph = load_graph(config, &stats);
  write_edge_file(graph, out_dir(config) / "graph.tsv");
  spdlog::info("{} data lines, {} malformed, {} filtered by language, {} duplicates collapsed", stats.data_lines,
               stats.malformed, stats.filtered, stats.duplicates);
  out << graph_summary(graph) << '\n';
  write_manifest(config, "ingest", {{"nodes", std::to_string(graph.num_concepts())},
                                    {"relations", std::to_string(graph.num_relations())},
                                    {"edges", std::to_string(graph.num_edges())},
                                    {"malformed_lines", std::to_string(stats.malformed)},
                                    {"concept_fingerprint", hex(graph.concepts().fingerprint())}});
}

std::vector<std::string> read_seeds(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open seeds file '{}'", path.string()));
  std::vector<std::string> seeds;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty() && t.front() != '#') seeds.emplace_back(t);
  }
  return seeds;
}

void cmd_subgraph(const RunConfig& config, std::ostream& out) {
  const auto graph = load_graph(config);
  const auto seeds = read_seeds(config.path("data.seeds"));
  const auto radius = config.get_size("subgraph.radius");
  const auto result = neighborhood_subgraph(graph, seeds, static_cast<int>(radius));
  write_edge_file(result.graph, out_dir(config) / "subgraph.tsv");
  std::vector<std::string> found;
  for (const auto& s : seeds) {
    if (result.graph.find_concept(normalize_concept(s))) found.push_back(normalize_concept(s));
  }
  out << graph_summary(result.graph) << '\n';
  out << "seeds=" << fmt::format("{}", fmt::join(found, ",")) << '\n';
  if (!result.missing_seeds.empty()) out << "missing=" << fmt::format("{}", fmt::join(result.missing_seeds, ",")) << '\n';
  write_manifest(config, "subgraph", {{"nodes", std::to_string(result.graph.num_concepts())},
                                      {"edges", std::to_string(result.graph.num_edges())},
                                      {"missing_seeds", std::to_string(result.missing_seeds.size())}});
}

void cmd_train_kg(const RunConfig& config, std::ostream& out) {
  const auto graph = load_graph(config);
  const auto train = train_kg(graph, kg_train_config(config));
  const auto dir = out_dir(config);
  save_params(dir / "kg.params", train.model.params);
  write_lines(dir / "kg_loss.txt", train.loss_history);
  Results results = {{"epochs_run", std::to_string(train.loss_history.size())},
                     {"final_loss", format_double(train.loss_history.back())},
                     {"unresolved_negatives", std::to_string(train.unresolved_negatives)},
                     {"concept_fingerprint", hex(graph.concepts().fingerprint())},
                     {"relation_fingerprint", hex(graph.relations().fingerprint())}};
  out << fmt::format("epochs={} final_loss={}", train.loss_history.size(), format_double(train.loss_history.back()));
  if (!train.validation_auc.empty()) {
    const double auc = train.validation_auc[train.best_epoch];
    results.emplace_back("best_epoch", std::to_string(train.best_epoch));
    results.emplace_back("validation_auc", format_double(auc));
    out << fmt::format(" best_epoch={} validation_auc={}", train.best_epoch, format_double(auc));
  }
  out << '\n';
  write_manifest(config, "train-kg", results);
}

void cmd_extract_cse(const RunConfig& config, std::ostream& out) {
  const auto graph = load_graph(config);
  const auto model = GraphAutoencoder::from_params(graph, load_params(config.path("data.checkpoint")));
  const auto split = load_split(config.path("data.split"));
  const auto path = parse_extraction_path(config.get("cse.path"));
  const auto classes = split.all();
  const auto table = extract_all(model, graph, classes, path, config.get_size("run.threads"));
  save_embedding_table(out_dir(config) / "cse.txt", table);
  out << fmt::format("classes={} dim={}\n", table.size(), table.dim());
  write_manifest(config, "extract-cse", {{"classes", std::to_string(table.size())},
                                         {"dim", std::to_string(table.dim())},
                                         {"radius", std::to_string(kCseRadius)},
                                         {"concept_fingerprint", hex(graph.concepts().fingerprint())}});
}

struct ZslData {
  ClassManifest split;
  VisualSet visual;
  LoadedSources sources;
  ClassInputs classes;  // all manifest classes
};

ZslData load_zsl_data(const RunConfig& config) {
  ZslData d;
  d.split = load_split(config.path("data.split"));
  d.visual = load_visual(config.path("data.visual"));
  d.sources = load_sources(config);
  d.classes = assemble_class_inputs(d.sources.view(), d.split.all());
  return d;
}

void cmd_train_zsl(const RunConfig& config, std::ostream& out) {
  const auto data = load_zsl_data(config);
  const auto seen = data.classes.select(data.split.seen);
  const auto train_images = data.visual.subset(data.split.seen);
  const auto arch = zsl_architecture(config, data.visual.dim(), data.classes);
  const auto result = train_zsl(arch, seen, train_images, zsl_train_config(config));
  const auto dir = out_dir(config);
  save_params(dir / "zsl.params", result.model.params);
  write_lines(dir / "zsl_loss.txt", result.loss_history);
  out << fmt::format("images={} epochs={} final_loss={}\n", train_images.size(), result.loss_history.size(),
                     format_double(result.loss_history.back()));
  write_manifest(config, "train-zsl", {{"train_images", std::to_string(train_images.size())},
                                       {"epochs_run", std::to_string(result.loss_history.size())},
                                       {"best_epoch", std::to_string(result.best_epoch)},
                                       {"initial_loss", format_double(result.loss_history.front())},
                                       {"final_loss", format_double(result.loss_history.back())}});
}

void cmd_eval_zsl(const RunConfig& config, std::ostream& out) {
  const auto data = load_zsl_data(config);
  const auto model = ZslModel::from_params(load_params(config.path("data.zsl_checkpoint")));
  if (model.arch.semantic_dim != data.classes.primary.cols() ||
      model.arch.secondary_dim != data.classes.secondary.cols()) {
    throw DimensionError(fmt::format(
        "checkpoint expects class vectors of width {} (secondary {}), the configured sources give {} (secondary {})",
        model.arch.semantic_dim, model.arch.secondary_dim, data.classes.primary.cols(), data.classes.secondary.cols()));
  }
  if (data.split.unseen.empty()) throw DataError("split has no unseen classes to evaluate");
  const auto candidates = data.classes.select(data.split.unseen);
  const auto test = data.visual.subset(data.split.unseen);
  if (test.size() == 0) throw DataError("no images of unseen classes in the visual file");
  const auto predicted_index = zsl_predict(model, candidates, test.features, config.get_size("run.threads"));
  std::vector<std::string> predicted;
  for (auto j : predicted_index) predicted.push_back(candidates.names[j]);
  const double top1 = top1_accuracy(predicted, test.labels);

  const fs::path path = out_dir(config) / "predictions.txt";
  std::ofstream pred(path);
  if (!pred) throw DataError(fmt::format("cannot write '{}'", path.string()));
  for (std::size_t i = 0; i < test.size(); ++i) {
    pred << test.image_ids[i] << ' ' << predicted[i] << ' ' << test.labels[i] << '\n';
  }
  pred << "top1 " << format_double(top1) << '\n';
  out << "top1 " << format_double(top1) << '\n';
  write_manifest(config, "eval-zsl", {{"test_images", std::to_string(test.size())}, {"top1", format_double(top1)}});
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  const auto& scenario = synth_scenario(config.get("synth.scenario"));
  const auto data = generate_synth(scenario, config.get_u64("run.seed"));
  write_synth(data, scenario, out_dir(config));
  out << fmt::format("scenario={} seen={} unseen={} images={} {}\n", scenario.name, data.split.seen.size(),
                     data.split.unseen.size(), data.visual.size(), graph_summary(data.graph));
  write_manifest(config, "synth", {{"seen_classes", std::to_string(data.split.seen.size())},
                                   {"unseen_classes", std::to_string(data.split.unseen.size())},
                                   {"images", std::to_string(data.visual.size())}});
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"ingest",    "subgraph", "train-kg", "extract-cse",
                                                 "train-zsl", "eval-zsl", "synth"};
  return names;
}

void run_command(std::string_view command, const RunConfig& config, std::ostream& out) {
  if (command == "ingest") return cmd_ingest(config, out);
  if (command == "subgraph") return cmd_subgraph(config, out);
  if (command == "train-kg") return cmd_train_kg(config, out);
  if (command == "extract-cse") return cmd_extract_cse(config, out);
  if (command == "train-zsl") return cmd_train_zsl(config, out);
  if (command == "eval-zsl") return cmd_eval_zsl(config, out);
  if (command == "synth") return cmd_synth(config, out);
  throw UsageError(fmt::format("unknown command '{}'", command));
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const UsageError*>(&error)) return 1;
  return 2;
}

KgTrainConfig kg_train_config(const RunConfig& config) {
  KgTrainConfig c;
  c.dims.input = config.get_size("kg.input_dim");
  c.dims.hidden = config.get_size("kg.hidden_dim");
  c.dims.output = config.get_size("kg.output_dim");
  c.dims.num_bases = config.get_size("kg.num_bases");
  c.epochs = config.get_size("kg.epochs");
  c.learning_rate = config.get_double("kg.learning_rate");
  c.corruption = {config.get_double("kg.corrupt_head"), config.get_double("kg.corrupt_tail"),
                  config.get_double("kg.corrupt_relation")};
  c.edge_dropout = config.get_double("kg.edge_dropout");
  c.validation_fraction = config.get_double("kg.validation_fraction");
  c.patience = config.get_size("kg.patience");
  c.batch_size = config.get_size("kg.batch_size");
  c.resample_negatives = config.get_bool("kg.resample_negatives");
  c.seed = config.get_u64("run.seed");
  c.validate();
  return c;
}

ZslTrainConfig zsl_train_config(const RunConfig& config) {
  ZslTrainConfig c;
  c.epochs = config.get_size("zsl.epochs");
  c.learning_rate = config.get_double("zsl.learning_rate");
  c.batch_size = config.get_size("zsl.batch_size");
  c.validation_fraction = config.get_double("zsl.validation_fraction");
  c.patience = config.get_size("zsl.patience");
  c.seed = config.get_u64("run.seed");
  c.validate();
  return c;
}

ZslArchitecture zsl_architecture(const RunConfig& config, std::size_t visual_dim, const ClassInputs& classes) {
  ZslArchitecture a;
  a.variant = parse_zsl_variant(config.get("zsl.variant"));
  a.visual_dim = visual_dim;
  a.semantic_dim = classes.primary.cols();
  a.secondary_dim = classes.secondary.cols();
  a.fusion_semantic_width = config.get_size("zsl.fusion_semantic_width");
  a.fusion_secondary_width = config.get_size("zsl.fusion_secondary_width");
  a.hidden_width = config.get_size("zsl.hidden_width");
  a.relation_width = config.get_size("zsl.relation_width");
  a.validate();
  return a;
}

SemanticSources LoadedSources::view() const {
  return {use_attributes ? &attributes : nullptr, use_word_vectors ? &word_vectors : nullptr,
          use_cse ? &cse : nullptr};
}

LoadedSources load_sources(const RunConfig& config) {
  LoadedSources s;
  const auto names = config.get_list("zsl.sources");
  if (names.empty()) throw UsageError("zsl.sources must name at least one of ha, dwe, cse");
  for (const auto& name : names) {
    if (name == "ha") {
      s.attributes = load_embedding_table(config.path("data.attributes"));
      s.use_attributes = true;
    } else if (name == "dwe") {
      s.word_vectors = load_embedding_table(config.path("data.word_vectors"));
      s.use_word_vectors = true;
    } else if (name == "cse") {
      s.cse = load_embedding_table(config.path("data.cse"));
      s.use_cse = true;
    } else {
      throw UsageError(fmt::format("unknown embedding source '{}' (expected ha, dwe or cse)", name));
    }
  }
  return s;
}

}  // namespace kcse::app
