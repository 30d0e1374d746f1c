#include "kcse_app/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse::app {

namespace {

// Defaults for every recognised key.
const std::map<std::string, std::string, std::less<>>& defaults() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"run.seed", "0"},
      {"run.threads", "1"},
      {"run.out_dir", "."},

      {"data.graph", ""},
      {"data.graph_format", "simple-tsv"},
      {"data.language", ""},
      {"data.seeds", ""},
      {"data.split", ""},
      {"data.visual", ""},
      {"data.attributes", ""},
      {"data.word_vectors", ""},
      {"data.cse", ""},
      {"data.checkpoint", ""},
      {"data.zsl_checkpoint", ""},

      {"subgraph.radius", "2"},

      {"kg.input_dim", "128"},
      {"kg.hidden_dim", "128"},
      {"kg.output_dim", "128"},
      {"kg.num_bases", "0"},
      {"kg.epochs", "500"},
      {"kg.learning_rate", "0.01"},
      {"kg.corrupt_head", "0.3333333333333333"},
      {"kg.corrupt_tail", "0.3333333333333333"},
      {"kg.corrupt_relation", "0.3333333333333334"},
      {"kg.edge_dropout", "0.2"},
      {"kg.validation_fraction", "0"},
      {"kg.patience", "50"},
      {"kg.batch_size", "0"},
      {"kg.resample_negatives", "true"},

      {"cse.path", "full-graph"},

      {"zsl.variant", "dezsl"},
      {"zsl.sources", "ha"},
      {"zsl.fusion_semantic_width", "1024"},
      {"zsl.fusion_secondary_width", "1024"},
      {"zsl.hidden_width", "1024"},
      {"zsl.relation_width", "1024"},
      {"zsl.epochs", "2000"},
      {"zsl.learning_rate", "0.00001"},
      {"zsl.batch_size", "64"},
      {"zsl.validation_fraction", "0.1"},
      {"zsl.patience", "50"},

      {"synth.scenario", "separable"},
  };
  return table;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

bool RunConfig::is_path_key(std::string_view key) {
  return (key.starts_with("data.") && key != "data.graph_format" && key != "data.language") || key == "run.out_dir";
}

void RunConfig::set(std::string_view key, std::string value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError(fmt::format("unknown configuration key '{}'", key));
  it->second = std::move(value);
}

void RunConfig::merge_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw UsageError(fmt::format("expected section.key=value, got '{}'", assignment));
  }
  set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::merge_text(std::string_view text, std::string_view source, const std::filesystem::path& base_dir) {
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw UsageError(fmt::format("{}:{}: malformed section header", source, line_no));
      section = std::string(trim(t.substr(1, t.size() - 2)));
      continue;
    }
    if (section == "result") continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos || section.empty()) {
      throw UsageError(fmt::format("{}:{}: expected 'key = value' inside a [section]", source, line_no));
    }
    const std::string key = fmt::format("{}.{}", section, trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (!values_.contains(key)) throw UsageError(fmt::format("{}:{}: unknown key '{}'", source, line_no, key));
    if (is_path_key(key) && !value.empty() && !base_dir.empty() && std::filesystem::path(value).is_relative()) {
      value = (base_dir / value).lexically_normal().string();
    }
    set(key, std::move(value));
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config file '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  merge_text(text.str(), path.string(), path.parent_path());
}

bool RunConfig::has(std::string_view key) const { return values_.contains(key); }

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError(fmt::format("unknown configuration key '{}'", key));
  return it->second;
}

std::string RunConfig::require_path(std::string_view key) const {
  const auto& v = get(key);
  if (v.empty()) throw UsageError(fmt::format("'{}' must be set (config file, --set or its flag)", key));
  return v;
}

std::filesystem::path RunConfig::path(std::string_view key) const { return require_path(key); }

double RunConfig::get_double(std::string_view key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) throw UsageError(fmt::format("'{}' must be a number, got '{}'", key, get(key)));
  return v;
}

std::size_t RunConfig::get_size(std::string_view key) const {
  std::size_t v = 0;
  if (!parse_size(get(key), v)) {
    throw UsageError(fmt::format("'{}' must be a non-negative integer, got '{}'", key, get(key)));
  }
  return v;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  const auto& s = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw UsageError(fmt::format("'{}' must be an unsigned integer, got '{}'", key, s));
  }
  return v;
}

bool RunConfig::get_bool(std::string_view key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw UsageError(fmt::format("'{}' must be true or false, got '{}'", key, s));
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  for (auto part : split(get(key), ',')) {
    part = trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

void RunConfig::write(std::ostream& out) const {
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
}

}  // namespace kcse::app
