#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcse/matrix.hpp"
#include "kcse/vocabulary.hpp"

namespace kcse {

/// Named dense vectors of one width, in insertion order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_.names(); }

  /// Appends a row; names are normalized. Throws DataError on duplicates or
  /// a width mismatch.
  void add(std::string_view name, std::span<const double> values);

  std::optional<std::size_t> find(std::string_view name) const;
  std::span<const double> row(std::size_t index) const { return {values_.data() + index * dim_, dim_}; }
  /// Row for a (normalized) name; DataError when absent.
  std::span<const double> at(std::string_view name) const;

  /// Rows for `names` stacked in the given order. DataError lists every
  /// absent name.
  Matrix select(std::span<const std::string> names, std::string_view what = "embedding") const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.names() == b.names() && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  Vocabulary names_;
  std::vector<double> values_;
};

/// word2vec text: `count dim`, then `name v1 ... vd` per line.
EmbeddingTable read_embedding_table(std::istream& in, std::string_view source = "<stream>");
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
void write_embedding_table(std::ostream& out, const EmbeddingTable& table);
void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace kcse
