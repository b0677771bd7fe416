#pragma once

#include <compare>
#include <string>

namespace botl {

// Identifies a base model across the framework: the stream that learnt it
// plus the stream-local model index. Total order gives deterministic
// tie-breaking wherever models are ranked.
struct ModelId {
  int stream = -1;
  int local = -1;
  auto operator<=>(const ModelId&) const = default;
};

inline std::string to_string(const ModelId& id) {
  return "s" + std::to_string(id.stream) + ":m" + std::to_string(id.local);
}

}  // namespace botl
