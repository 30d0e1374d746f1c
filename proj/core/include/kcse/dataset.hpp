#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kcse/matrix.hpp"

namespace kcse {

/// Seen and unseen class names (normalized), disjoint, in file order.
struct ClassManifest {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;

  /// seen followed by unseen.
  std::vector<std::string> all() const;
  /// Throws DataError on overlap, duplicates or an empty seen list.
  void validate() const;
};

/// `[seen]` and `[unseen]` sections, one class per line, `#` comments.
ClassManifest read_split(std::istream& in, std::string_view source = "<stream>");
ClassManifest load_split(const std::filesystem::path& path);
void write_split(std::ostream& out, const ClassManifest& manifest);
void save_split(const std::filesystem::path& path, const ClassManifest& manifest);

/// Per-image visual features with image ids and class labels.
struct VisualSet {
  std::vector<std::string> image_ids;
  std::vector<std::string> labels;  // normalized class names
  Matrix features;                  // images x m

  std::size_t size() const { return image_ids.size(); }
  std::size_t dim() const { return features.cols(); }

  /// Images whose label is in `classes`, original order kept.
  VisualSet subset(const std::vector<std::string>& classes) const;
};

/// Text form: `count dim`, then `image_id class v1 ... vm`.
VisualSet read_visual_text(std::istream& in, std::string_view source = "<stream>");
void write_visual_text(std::ostream& out, const VisualSet& set);

/// Binary form: magic `KCSEVIS1`, u64 rows, u64 cols, row-major
/// little-endian doubles; ids and labels live in `<path>.index` as
/// `image_id class` lines.
void save_visual_binary(const std::filesystem::path& path, const VisualSet& set);

/// Detects the form from the first bytes.
VisualSet load_visual(const std::filesystem::path& path);
void save_visual_text(const std::filesystem::path& path, const VisualSet& set);

}  // namespace kcse
