#ifndef STTSIM_PREFETCH_H
#define STTSIM_PREFETCH_H

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sttsim/cache.h"
#include "sttsim/trace.h"
#include "sttsim/types.h"

namespace sttsim
{
inline constexpr std::array<unsigned, 5> kPrefetchDistances{1, 4, 8, 16, 32};

bool is_valid_distance(unsigned distance);

struct PrefetchConfig {
  unsigned degree = 4;
  unsigned distance = 16;
  // When set, an expiration miss triggers the stream and an expired copy in the
  // cache does not suppress a prefetch, so expired blocks get reloaded.
  bool trigger_on_expiration_miss = true;
  std::size_t table_entries = 64;

  void validate() const; // throws std::invalid_argument
};

struct StrideEntry {
  bool valid = false;
  std::uint64_t pc = 0;
  address_t last_address = 0;
  std::int64_t stride = 0;
  std::uint8_t confidence = 0; // 2-bit saturating
  std::optional<std::int64_t> frontier_block; // furthest block already covered
};

struct PrefetchRequest {
  address_t block_address = 0;
  std::uint64_t trigger_pc = 0;
  cycle_t issue_cycle = 0;

  friend bool operator==(const PrefetchRequest&, const PrefetchRequest&) = default;
};

/// PC-indexed stride prefetcher. Only demand accesses train the table.
class StridePrefetcher
{
public:
  static constexpr std::uint8_t kConfidenceMax = 3;
  static constexpr std::uint8_t kConfidenceThreshold = 2;

  StridePrefetcher(PrefetchConfig config, std::uint64_t block_size);

  /// Trains on the demand access and returns the prefetches to issue. The
  /// stream triggers on a demand miss (an expiration miss only when
  /// trigger_on_expiration_miss is set) or on the first demand use of a
  /// prefetched block. Candidates already live in the cache or outstanding in
  /// the MSHR are skipped without consuming the degree.
  std::vector<PrefetchRequest> observe(const TraceEvent& event, const AccessResult& result, const Cache& cache, cycle_t now);

  const PrefetchConfig& config() const { return config_; }
  unsigned distance() const { return config_.distance; }
  void set_distance(unsigned distance);
  void set_degree(unsigned degree);
  const StrideEntry& entry_for(std::uint64_t pc) const { return table_[pc % table_.size()]; }

private:
  bool suppressed(address_t block, const Cache& cache, cycle_t now) const;

  PrefetchConfig config_;
  unsigned offset_bits_;
  std::vector<StrideEntry> table_;
};

enum class PrefetchTimeliness { Late, Timely, Unused };

/// Late: the first demand arrived while the prefetch was still in flight.
/// Timely: the first demand arrived after the fill and before expiry.
/// Unused: no demand before the block expired or was evicted.
PrefetchTimeliness classify_prefetch_timeliness(cycle_t ready_cycle, cycle_t expiry_cycle, std::optional<cycle_t> first_demand_use);

/// Near-side throttling: start at the shortest distance, raise it only when too
/// many prefetches arrive late.
struct NstThresholds {
  double raise_above = 0.25;
  double lower_below = 0.05;
  std::uint64_t window_demand_accesses = 4096;
};

struct NstWindowStats {
  std::uint64_t late_prefetches = 0;
  std::uint64_t total_prefetches = 0;
};

struct NstState {
  unsigned current_distance = kPrefetchDistances.front();
  NstThresholds thresholds;
  std::uint64_t windows_seen = 0;
};

/// Applies one window's verdict and returns the new distance.
unsigned nst_update(NstState& state, const NstWindowStats& window);
} // namespace sttsim

#endif
