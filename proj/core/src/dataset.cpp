#include "kcse/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse {

namespace {

constexpr char kVisualMagic[8] = {'K', 'C', 'S', 'E', 'V', 'I', 'S', '1'};

static_assert(std::endian::native == std::endian::little, "binary visual files assume a little-endian host");

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

std::vector<std::string> ClassManifest::all() const {
  std::vector<std::string> out = seen;
  out.insert(out.end(), unseen.begin(), unseen.end());
  return out;
}

void ClassManifest::validate() const {
  if (seen.empty()) throw DataError("split has no seen classes");
  std::unordered_set<std::string> names;
  for (const auto& name : all()) {
    if (!names.insert(name).second) {
      throw DataError(fmt::format("class '{}' is listed twice or in both seen and unseen", name));
    }
  }
}

ClassManifest read_split(std::istream& in, std::string_view source) {
  ClassManifest manifest;
  std::vector<std::string>* section = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (text == "[seen]") {
      section = &manifest.seen;
    } else if (text == "[unseen]") {
      section = &manifest.unseen;
    } else if (!section) {
      throw DataError(fmt::format("{}:{}: class name before a [seen]/[unseen] header", source, line_no));
    } else {
      section->push_back(normalize_concept(text));
    }
  }
  manifest.validate();
  return manifest;
}

ClassManifest load_split(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_split(in, path.string());
}

void write_split(std::ostream& out, const ClassManifest& manifest) {
  out << "[seen]\n";
  for (const auto& name : manifest.seen) out << name << '\n';
  out << "[unseen]\n";
  for (const auto& name : manifest.unseen) out << name << '\n';
}

void save_split(const std::filesystem::path& path, const ClassManifest& manifest) {
  auto out = open_out(path);
  write_split(out, manifest);
}

VisualSet VisualSet::subset(const std::vector<std::string>& classes) const {
  const std::unordered_set<std::string> keep(classes.begin(), classes.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i) {
    if (keep.contains(labels[i])) rows.push_back(i);
  }
  VisualSet out;
  out.features = Matrix(rows.size(), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.image_ids.push_back(image_ids[rows[k]]);
    out.labels.push_back(labels[rows[k]]);
    const auto src = features.row(rows[k]);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
  }
  return out;
}

VisualSet read_visual_text(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](std::string_view why) { return DataError(fmt::format("{}:{}: {}", source, line_no, why)); };
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty visual file", source));
  ++line_no;
  const auto header = split_ws(line);
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim)) {
    throw fail("expected header 'count dim'");
  }
  VisualSet set;
  set.features = Matrix(count, dim);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() != dim + 2) {
      throw fail(fmt::format("expected image id, class and {} values, found {} fields", dim, fields.size()));
    }
    if (row == count) throw fail(fmt::format("more rows than the {} promised by the header", count));
    set.image_ids.emplace_back(fields[0]);
    set.labels.push_back(normalize_concept(fields[1]));
    auto dst = set.features.row(row);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 2], dst[k])) throw fail(fmt::format("bad number '{}'", fields[k + 2]));
    }
    ++row;
  }
  if (row != count) throw DataError(fmt::format("{}: header promises {} rows, file has {}", source, count, row));
  return set;
}

void write_visual_text(std::ostream& out, const VisualSet& set) {
  out << set.size() << ' ' << set.dim() << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.image_ids[i] << ' ' << set.labels[i];
    for (double v : set.features.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

void save_visual_text(const std::filesystem::path& path, const VisualSet& set) {
  auto out = open_out(path);
  write_visual_text(out, set);
}

void save_visual_binary(const std::filesystem::path& path, const VisualSet& set) {
  auto out = open_out(path, std::ios::binary);
  out.write(kVisualMagic, sizeof kVisualMagic);
  const std::uint64_t shape[2] = {set.size(), set.dim()};
  out.write(reinterpret_cast<const char*>(shape), sizeof shape);
  const auto data = set.features.data();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  auto index = open_out(path.string() + ".index");
  for (std::size_t i = 0; i < set.size(); ++i) index << set.image_ids[i] << ' ' << set.labels[i] << '\n';
}

VisualSet load_visual(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[sizeof kVisualMagic] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kVisualMagic, sizeof magic) != 0) {
    in.clear();
    in.seekg(0);
    return read_visual_text(in, path.string());
  }
  std::uint64_t shape[2] = {};
  in.read(reinterpret_cast<char*>(shape), sizeof shape);
  if (!in) throw DataError(fmt::format("{}: truncated header", path.string()));
  VisualSet set;
  set.features = Matrix(shape[0], shape[1]);
  const auto data = set.features.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (in.gcount() != static_cast<std::streamsize>(data.size_bytes())) {
    throw DataError(fmt::format("{}: expected {}x{} doubles, file is truncated", path.string(), shape[0], shape[1]));
  }

  const auto index_path = path.string() + ".index";
  auto index = open_in(index_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() != 2) throw DataError(fmt::format("{}:{}: expected 'image_id class'", index_path, line_no));
    set.image_ids.emplace_back(fields[0]);
    set.labels.push_back(normalize_concept(fields[1]));
  }
  if (set.image_ids.size() != shape[0]) {
    throw DataError(fmt::format("{} lists {} images, '{}' holds {}", index_path, set.image_ids.size(), path.string(),
                                shape[0]));
  }
  return set;
}

}  // namespace kcse
