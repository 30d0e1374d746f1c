#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kcse/kg_trainer.hpp"
#include "kcse/zsl.hpp"
#include "kcse_app/config.hpp"

namespace kcse::app {

/// Subcommand names in help order.
const std::vector<std::string>& command_names();

/// Runs one subcommand. Summaries go to `out`; artifacts and
/// `<command>.manifest` go to run.out_dir. Errors propagate as
/// UsageError / DataError.
void run_command(std::string_view command, const RunConfig& config, std::ostream& out);

/// Maps an exception to the process exit code (1 usage, 2 data or dimension).
int exit_code_for(const std::exception& error);

// Library settings derived from a configuration.
KgTrainConfig kg_train_config(const RunConfig& config);
ZslTrainConfig zsl_train_config(const RunConfig& config);
ZslArchitecture zsl_architecture(const RunConfig& config, std::size_t visual_dim, const ClassInputs& classes);

/// Tables named by zsl.sources (ha, dwe, cse) loaded from their data.* paths.
struct LoadedSources {
  EmbeddingTable attributes, word_vectors, cse;
  bool use_attributes = false, use_word_vectors = false, use_cse = false;

  SemanticSources view() const;
};
LoadedSources load_sources(const RunConfig& config);

}  // namespace kcse::app
