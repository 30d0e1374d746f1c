#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "kcse/knowledge_graph.hpp"

namespace kcse {

enum class EdgeFormat { simple_tsv, conceptnet_dump };

/// Accepts "simple-tsv" and "conceptnet-dump". Throws UsageError otherwise.
EdgeFormat parse_edge_format(std::string_view tag);
std::string_view to_string(EdgeFormat format);

struct ParseStats {
  std::size_t data_lines = 0;  // non-blank, non-comment
  std::size_t malformed = 0;
  std::size_t filtered = 0;    // dropped by the language filter
  std::size_t duplicates = 0;
};

/// Reads an edge file into a graph.
///
/// simple-tsv lines are `relation<TAB>head<TAB>tail[<TAB>weight]`; blank lines
/// and lines starting with '#' are skipped. conceptnet-dump lines are the
/// five-column ConceptNet 5.5 assertion rows; `/r/` and `/c/<lang>/` prefixes
/// are stripped, along with any part-of-speech suffix. When
/// `language_filter` is set, an edge is kept only if both ends are in that
/// language.
///
/// Malformed lines are skipped and counted. Throws DataError if the file
/// cannot be read or more than half of its data lines are malformed.
KnowledgeGraph parse_edge_file(const std::filesystem::path& path, EdgeFormat format,
                               std::optional<std::string> language_filter = std::nullopt,
                               ParseStats* stats = nullptr);

/// Same parser over an in-memory buffer.
KnowledgeGraph parse_edges(std::string_view text, EdgeFormat format,
                           std::optional<std::string> language_filter = std::nullopt,
                           ParseStats* stats = nullptr);

/// Writes the graph as simple-tsv, one edge per line with its weight.
void write_edge_file(const KnowledgeGraph& graph, const std::filesystem::path& path);

}  // namespace kcse
