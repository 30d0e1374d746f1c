#include "kcse/edge_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse {

EdgeFormat parse_edge_format(std::string_view tag) {
  if (tag == "simple-tsv") return EdgeFormat::simple_tsv;
  if (tag == "conceptnet-dump") return EdgeFormat::conceptnet_dump;
  throw UsageError(fmt::format("unknown edge format '{}' (expected simple-tsv or conceptnet-dump)", tag));
}

std::string_view to_string(EdgeFormat format) {
  return format == EdgeFormat::simple_tsv ? "simple-tsv" : "conceptnet-dump";
}

namespace {

struct ConceptUri {
  std::string_view language;
  std::string_view term;
};

// "/c/en/blue_whale/n/wn/animal" -> {en, blue_whale}
std::optional<ConceptUri> parse_concept_uri(std::string_view uri) {
  if (!uri.starts_with("/c/")) return std::nullopt;
  uri.remove_prefix(3);
  const auto slash = uri.find('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  ConceptUri out{uri.substr(0, slash), uri.substr(slash + 1)};
  if (const auto pos_suffix = out.term.find('/'); pos_suffix != std::string_view::npos) {
    out.term = out.term.substr(0, pos_suffix);
  }
  if (out.term.empty()) return std::nullopt;
  return out;
}

double metadata_weight(std::string_view blob) {
  constexpr std::string_view key = "\"weight\":";
  const auto pos = blob.find(key);
  if (pos == std::string_view::npos) return 1.0;
  std::string_view rest = trim(blob.substr(pos + key.size()));
  std::size_t len = 0;
  while (len < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[len])) || rest[len] == '.' ||
                               rest[len] == '-' || rest[len] == '+' || rest[len] == 'e' || rest[len] == 'E')) {
    ++len;
  }
  double w = 1.0;
  if (!parse_double(rest.substr(0, len), w) || w < 0.0) return 1.0;
  return w;
}

class EdgeLineParser {
 public:
  EdgeLineParser(EdgeFormat format, std::optional<std::string> language)
      : format_(format), language_(std::move(language)) {}

  void consume(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) return;
    if (format_ == EdgeFormat::simple_tsv && line.front() == '#') return;
    ++stats_.data_lines;
    const bool ok = format_ == EdgeFormat::simple_tsv ? simple(line) : dump(line);
    if (!ok) ++stats_.malformed;
  }

  KnowledgeGraph finish(std::string_view source) && {
    if (stats_.data_lines > 0 && 2 * stats_.malformed > stats_.data_lines) {
      throw DataError(fmt::format("{}: {} of {} lines are malformed for format {}; wrong format?", source,
                                  stats_.malformed, stats_.data_lines, to_string(format_)));
    }
    if (stats_.malformed > 0) {
      spdlog::warn("{}: skipped {} malformed line(s) of {}", source, stats_.malformed, stats_.data_lines);
    }
    return std::move(builder_).build();
  }

  const ParseStats& stats() const { return stats_; }

 private:
  void add(std::string_view relation, std::string_view head, std::string_view tail, double weight) {
    const std::size_t before = builder_.num_edges();
    builder_.add_edge(normalize_concept(head), relation, normalize_concept(tail), weight);
    if (builder_.num_edges() == before) ++stats_.duplicates;
  }

  bool simple(std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) return false;
    const auto rel = trim(fields[0]), head = trim(fields[1]), tail = trim(fields[2]);
    if (rel.empty() || head.empty() || tail.empty()) return false;
    double weight = 1.0;
    if (fields.size() == 4 && (!parse_double(fields[3], weight) || weight < 0.0)) return false;
    add(rel, head, tail, weight);
    return true;
  }

  bool dump(std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 5) return false;
    std::string_view rel = fields[1];
    if (!rel.starts_with("/r/") || rel.size() == 3) return false;
    rel.remove_prefix(3);
    const auto head = parse_concept_uri(fields[2]);
    const auto tail = parse_concept_uri(fields[3]);
    if (!head || !tail) return false;
    if (language_ && (head->language != *language_ || tail->language != *language_)) {
      ++stats_.filtered;
      return true;
    }
    add(rel, head->term, tail->term, metadata_weight(fields[4]));
    return true;
  }

  EdgeFormat format_;
  std::optional<std::string> language_;
  GraphBuilder builder_;
  ParseStats stats_;
};

}  // namespace

KnowledgeGraph parse_edges(std::string_view text, EdgeFormat format, std::optional<std::string> language_filter,
                           ParseStats* stats) {
  EdgeLineParser parser(format, std::move(language_filter));
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    parser.consume(text.substr(start, end - start));
    start = end + 1;
  }
  if (stats) *stats = parser.stats();
  return std::move(parser).finish("<buffer>");
}

KnowledgeGraph parse_edge_file(const std::filesystem::path& path, EdgeFormat format,
                               std::optional<std::string> language_filter, ParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read edge file '{}'", path.string()));
  EdgeLineParser parser(format, std::move(language_filter));
  std::string line;
  while (std::getline(in, line)) parser.consume(line);
  if (in.bad()) throw DataError(fmt::format("I/O error while reading '{}'", path.string()));
  if (stats) *stats = parser.stats();
  return std::move(parser).finish(path.string());
}

void write_edge_file(const KnowledgeGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write edge file '{}'", path.string()));
  for (const auto& e : graph.edges()) {
    out << graph.relation_name(e.relation) << '\t' << graph.concept_name(e.head) << '\t'
        << graph.concept_name(e.tail) << '\t' << format_double(e.weight) << '\n';
  }
  out.flush();
  if (!out) throw DataError(fmt::format("I/O error while writing '{}'", path.string()));
}

}  // namespace kcse
