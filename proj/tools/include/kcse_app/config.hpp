#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kcse::app {

/// Resolved `section.key -> value` settings of one command run.
///
/// Starts from the built-in defaults; every key must be one of them, so a
/// misspelt key is a usage error rather than a silently ignored setting.
class RunConfig {
 public:
  RunConfig();

  /// Merges a `[section]` / `key = value` file. Relative paths in path
  /// keys are taken relative to the file's directory. A `[result]` section
  /// (written into manifests) is skipped.
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, std::string_view source, const std::filesystem::path& base_dir = {});
  /// `section.key=value`, as given to --set.
  void merge_assignment(std::string_view assignment);
  void set(std::string_view key, std::string value);

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::string require_path(std::string_view key) const;  // non-empty or UsageError
  std::filesystem::path path(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;

  /// Same layout as the input files; every key, sorted by section and key.
  void write(std::ostream& out) const;

  static bool is_path_key(std::string_view key);

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace kcse::app
