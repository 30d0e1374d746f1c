#include "kcse/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/text.hpp"

namespace kcse {

namespace {
constexpr std::string_view kHeader = "kcse-params v1";
}

void write_params(std::ostream& out, const ParamStore& params) {
  out << kHeader << '\n';
  for (const auto& [name, p] : params) {
    out << name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (std::size_t r = 0; r < p.value.rows(); ++r) {
      const auto row = p.value.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << format_double(row[c]);
      }
      out << '\n';
    }
  }
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write checkpoint '{}'", path.string()));
  write_params(out, params);
  out.flush();
  if (!out) throw DataError(fmt::format("I/O error while writing '{}'", path.string()));
}

ParamStore read_params(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kHeader) {
    throw DataError(fmt::format("{}: missing '{}' header", source, kHeader));
  }
  ParamStore params;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto head = split_ws(line);
    std::size_t rows = 0, cols = 0;
    if (head.size() != 3 || !parse_size(head[1], rows) || !parse_size(head[2], cols)) {
      throw DataError(fmt::format("{}:{}: expected 'name rows cols'", source, line_no));
    }
    const std::string name(head[0]);  // `line` is reused below
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw DataError(fmt::format("{}: truncated parameter '{}'", source, name));
      ++line_no;
      const auto fields = split_ws(line);
      if (fields.size() != cols) {
        throw DataError(fmt::format("{}:{}: expected {} values, found {}", source, line_no, cols, fields.size()));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (!parse_double(fields[c], m(r, c))) {
          throw DataError(fmt::format("{}:{}: bad number '{}'", source, line_no, fields[c]));
        }
      }
    }
    if (params.contains(name)) throw DataError(fmt::format("{}: duplicate parameter '{}'", source, name));
    params.add(name, std::move(m));
  }
  return params;
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read checkpoint '{}'", path.string()));
  return read_params(in, path.string());
}

}  // namespace kcse
