#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kcse {

/// Lowercases and maps spaces and '+' to underscores, so "Blue Whale",
/// "blue+whale" and "blue_whale" all name the same concept.
std::string normalize_concept(std::string_view name);

std::string_view trim(std::string_view s);

/// Splits on a single character; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char sep);

/// Splits on runs of blanks (space or tab); empty fields are dropped.
std::vector<std::string_view> split_ws(std::string_view s);

/// Parses a full string as a double; returns false on trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_size(std::string_view s, std::size_t& out);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace kcse
