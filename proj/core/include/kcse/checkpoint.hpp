#pragma once

#include <filesystem>
#include <iosfwd>

#include "kcse/param_store.hpp"

namespace kcse {

/// Text checkpoint: a `kcse-params v1` header, then for every parameter a
/// `name rows cols` line followed by `rows` lines of `cols` numbers. Numbers
/// are written in shortest round-trip form, so reloading is exact.
void write_params(std::ostream& out, const ParamStore& params);
void save_params(const std::filesystem::path& path, const ParamStore& params);

ParamStore read_params(std::istream& in, std::string_view source = "<stream>");
ParamStore load_params(const std::filesystem::path& path);

}  // namespace kcse
