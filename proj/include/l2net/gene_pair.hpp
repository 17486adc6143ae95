#pragma once

#include <cstdint>

namespace l2net {

/// Unordered gene pair stored with m < n.
struct GenePair {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  friend bool operator==(const GenePair &, const GenePair &) = default;
  friend auto operator<=>(const GenePair &, const GenePair &) = default;
};

} // namespace l2net
