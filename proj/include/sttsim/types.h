#ifndef STTSIM_TYPES_H
#define STTSIM_TYPES_H

#include <cstdint>
#include <limits>

namespace sttsim
{
using cycle_t = std::uint64_t;
using address_t = std::uint64_t;

inline constexpr cycle_t kNeverCycle = std::numeric_limits<cycle_t>::max();
inline constexpr std::uint64_t kDefaultClockHz = 2'000'000'000ULL;

enum class AccessKind : std::uint8_t { Read = 0, Write = 1 };

enum class Origin : std::uint8_t { Demand, Prefetch };

constexpr cycle_t saturating_add(cycle_t a, cycle_t b)
{
  return (a > kNeverCycle - b) ? kNeverCycle : a + b;
}
} // namespace sttsim

#endif
