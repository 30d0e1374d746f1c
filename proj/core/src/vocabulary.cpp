#include "kcse/vocabulary.hpp"

#include "kcse/rng.hpp"

namespace kcse {

std::uint32_t Vocabulary::intern(std::string_view name) {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  return std::nullopt;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : names_) {
    h = fnv1a64(n, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  return h;
}

}  // namespace kcse
