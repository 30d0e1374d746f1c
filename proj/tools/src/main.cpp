#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kcse/error.hpp"
#include "kcse_app/commands.hpp"
#include "kcse_app/config.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Shorthand flags; anything else goes through --set section.key=value.
const std::map<std::string, std::vector<Flag>>& command_flags() {
  static const Flag graph{"--graph", "data.graph", "Edge file"};
  static const Flag format{"--format", "data.graph_format", "simple-tsv or conceptnet-dump"};
  static const Flag language{"--language", "data.language", "Keep only this language (conceptnet-dump)"};
  static const Flag split{"--split", "data.split", "Seen/unseen split file"};
  static const Flag visual{"--visual", "data.visual", "Visual feature file"};
  static const Flag attributes{"--attributes", "data.attributes", "Attribute table"};
  static const Flag words{"--word-vectors", "data.word_vectors", "Word vector table"};
  static const Flag cse{"--cse", "data.cse", "Commonsense embedding table"};
  static const Flag sources{"--sources", "zsl.sources", "Comma list of ha, dwe, cse"};
  static const Flag variant{"--variant", "zsl.variant", "dezsl or rn"};
  static const std::map<std::string, std::vector<Flag>> table = {
      {"ingest", {graph, format, language}},
      {"subgraph",
       {graph, format, language, {"--seeds", "data.seeds", "Seed concepts, one per line"},
        {"--radius", "subgraph.radius", "Hop radius"}}},
      {"train-kg", {graph, format, language, {"--epochs", "kg.epochs", "Training epochs"}}},
      {"extract-cse",
       {graph, format, language, split, {"--checkpoint", "data.checkpoint", "Trained graph model"},
        {"--path", "cse.path", "full-graph or per-class"}}},
      {"train-zsl", {split, visual, attributes, words, cse, sources, variant, {"--epochs", "zsl.epochs", "Epochs"}}},
      {"eval-zsl",
       {split, visual, attributes, words, cse, sources, {"--zsl-checkpoint", "data.zsl_checkpoint", "Trained ZSL model"}}},
      {"synth", {{"--scenario", "synth.scenario", "separable, degraded-attributes, animals-shape or apy-shape"}}},
  };
  return table;
}

const char* command_help(const std::string& name) {
  static const std::map<std::string, const char*> help = {
      {"ingest", "Parse an edge file and report its size"},
      {"subgraph", "Extract the radius-hop subgraph around seed concepts"},
      {"train-kg", "Train the graph encoder and relation decoder on link prediction"},
      {"extract-cse", "Write per-class commonsense embeddings from a trained encoder"},
      {"train-zsl", "Train a zero-shot model on seen classes"},
      {"eval-zsl", "Score a trained zero-shot model on unseen classes"},
      {"synth", "Generate a synthetic dataset and a matching config"},
  };
  const auto it = help.find(name);
  return it == help.end() ? "" : it->second;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("kcse"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Commonsense embeddings from knowledge graphs for zero-shot learning"};
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::optional<std::string> seed, threads, out_dir;
    std::vector<std::string> sets;
    std::map<std::string, std::optional<std::string>> flags;
  };
  std::map<std::string, Options> options;

  for (const auto& name : kcse::app::command_names()) {
    auto& opt = options[name];
    auto* sub = app.add_subcommand(name, command_help(name));
    sub->add_option("--config", opt.config, "Config file or manifest to start from");
    sub->add_option("--seed", opt.seed, "Random seed");
    sub->add_option("--threads", opt.threads, "Worker cap (0 = all cores)");
    sub->add_option("--out-dir", opt.out_dir, "Directory for artifacts and the manifest");
    sub->add_option("--set", opt.sets, "Override any setting: section.key=value");
    for (const auto& flag : command_flags().at(name)) sub->add_option(flag.name, opt.flags[flag.key], flag.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto& opt = options.at(command);
  try {
    kcse::app::RunConfig config;
    if (!opt.config.empty()) config.merge_file(opt.config);
    for (const auto& [key, value] : opt.flags) {
      if (value) config.set(key, *value);
    }
    if (opt.seed) config.set("run.seed", *opt.seed);
    if (opt.threads) config.set("run.threads", *opt.threads);
    if (opt.out_dir) config.set("run.out_dir", *opt.out_dir);
    for (const auto& s : opt.sets) config.merge_assignment(s);
    kcse::app::run_command(command, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "kcse " << command << ": " << e.what() << '\n';
    return kcse::app::exit_code_for(e);
  }
  return 0;
}
