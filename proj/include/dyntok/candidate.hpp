#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dyntok {

using TokenId = std::uint32_t;

/// A span of existing tokens proposed as one new token.
struct MergeCandidate {
  std::vector<TokenId> component_ids;
  std::u32string surface;
  std::uint64_t frequency = 0;

  bool operator==(const MergeCandidate&) const = default;
};

/// Selection order used everywhere candidates are ranked: frequency
/// descending, then shorter surface, then lexicographic surface, then
/// component ids.
bool ranks_before(const MergeCandidate& a, const MergeCandidate& b);

}  // namespace dyntok
