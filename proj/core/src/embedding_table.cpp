#include "kcse/embedding_table.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse {

void EmbeddingTable::add(std::string_view name, std::span<const double> values) {
  if (values.size() != dim_) {
    throw DataError(fmt::format("embedding '{}' has {} values, table width is {}", name, values.size(), dim_));
  }
  const std::string key = normalize_concept(name);
  if (names_.contains(key)) throw DataError(fmt::format("duplicate embedding for '{}'", key));
  names_.intern(key);
  values_.insert(values_.end(), values.begin(), values.end());
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view name) const {
  const auto id = names_.find(normalize_concept(name));
  if (!id) return std::nullopt;
  return *id;
}

std::span<const double> EmbeddingTable::at(std::string_view name) const {
  const auto id = find(name);
  if (!id) throw DataError(fmt::format("no embedding for '{}'", name));
  return row(*id);
}

Matrix EmbeddingTable::select(std::span<const std::string> names, std::string_view what) const {
  Matrix out(names.size(), dim_);
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto id = find(names[i]);
    if (!id) {
      missing.push_back(names[i]);
      continue;
    }
    const auto src = row(*id);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  if (!missing.empty()) {
    throw DataError(fmt::format("missing {} for {} class(es): {}", what, missing.size(), fmt::join(missing, ", ")));
  }
  return out;
}

EmbeddingTable read_embedding_table(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](std::string_view why) {
    return DataError(fmt::format("{}:{}: {}", source, line_no, why));
  };
  if (!std::getline(in, line)) {
    throw DataError(fmt::format("{}: empty embedding file", source));
  }
  ++line_no;
  const auto header = split_ws(line);
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim)) {
    throw fail("expected header 'count dim'");
  }
  EmbeddingTable table(dim);
  std::vector<double> values(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() != dim + 1) {
      throw fail(fmt::format("expected a name and {} values, found {} fields", dim, fields.size()));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], values[k])) throw fail(fmt::format("bad number '{}'", fields[k + 1]));
    }
    table.add(fields[0], values);
  }
  if (table.size() != count) {
    throw DataError(fmt::format("{}: header promises {} rows, file has {}", source, count, table.size()));
  }
  return table;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open embedding file '{}'", path.string()));
  return read_embedding_table(in, path.string());
}

void write_embedding_table(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.names()[i];
    for (double v : table.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write embedding file '{}'", path.string()));
  write_embedding_table(out, table);
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace kcse
