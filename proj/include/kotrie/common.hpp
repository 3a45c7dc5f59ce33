#ifndef KOTRIE_COMMON_HPP
#define KOTRIE_COMMON_HPP

#include <cstdint>
#include <limits>

namespace kotrie {

using Key = std::int64_t;

/// Returned by predecessor() when no smaller key is present.
inline constexpr Key kNoKey = -1;

inline constexpr Key kMinusInfinity = std::numeric_limits<Key>::min();
inline constexpr Key kPlusInfinity = std::numeric_limits<Key>::max();

using ProcessId = std::uint32_t;

inline constexpr std::size_t kCacheLine = 64;

inline constexpr std::size_t kDefaultMaxProcesses = 512;

}  // namespace kotrie

#endif  // KOTRIE_COMMON_HPP
