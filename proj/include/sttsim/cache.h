#ifndef STTSIM_CACHE_H
#define STTSIM_CACHE_H

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sttsim/energy.h"
#include "sttsim/trace.h"
#include "sttsim/types.h"

namespace sttsim
{
struct CacheGeometry {
  std::uint64_t capacity = 32 * 1024;
  std::uint64_t block_size = 64;
  std::uint64_t associativity = 4;

  void validate() const; // throws std::invalid_argument
  std::uint64_t sets() const { return capacity / (block_size * associativity); }
  unsigned offset_bits() const;
};

struct CacheTiming {
  cycle_t memory_latency = 100;
  std::size_t mshr_entries = 8;
  std::uint64_t clock_hz = kDefaultClockHz;
};

// A block whose retention elapsed keeps its tag in the frame (state Expired)
// until the frame is reused; a demand to it is an expiration miss.
enum class BlockState : std::uint8_t { Invalid, Valid, Expired };

struct CacheBlock {
  std::uint64_t tag = 0;
  BlockState state = BlockState::Invalid;
  bool dirty = false;
  bool prefetched = false;             // filled by a prefetch and not yet demanded
  bool reloaded_after_expiry = false;  // that prefetch replaced an expired copy of the same block
  cycle_t fill_cycle = 0;              // last cell write: fill or demand store
  cycle_t expiry_cycle = kNeverCycle;  // fill_cycle + retention while Valid
  std::uint64_t lru_stamp = 0;
};

enum class MissClass : std::uint8_t { NonExpiration, Expiration };

struct ExpiredBlock {
  address_t block_address = 0;
  bool unused_prefetch = false;
};

struct BlockFill {
  address_t block_address = 0;
  Origin origin = Origin::Demand;
  cycle_t cycle = 0;
};

struct AccessResult {
  bool hit = false;
  std::optional<MissClass> miss_class; // set iff !hit
  cycle_t latency_cycles = 0;
  cycle_t stall_cycles = 0;
  bool merged = false;              // miss served by an outstanding MSHR entry
  bool late_prefetch = false;       // ...which was a prefetch still in flight
  bool first_use_of_prefetch = false;
  std::vector<BlockFill> fills;
  std::vector<ExpiredBlock> expirations;
};

struct MshrEntry {
  address_t block_address = 0;
  Origin origin = Origin::Demand;
  cycle_t issue_cycle = 0;
  cycle_t ready_cycle = 0;
  bool demand_merged = false;
  bool write = false;
  std::uint64_t sequence = 0;
};

class Mshr
{
public:
  explicit Mshr(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= capacity_; }
  bool empty() const { return entries_.empty(); }

  MshrEntry* find(address_t block_address);
  const MshrEntry* find(address_t block_address) const;
  /// Returns nullptr when full or when the block already has an entry.
  MshrEntry* allocate(address_t block_address, Origin origin, cycle_t issue, cycle_t ready);
  void retire(address_t block_address);
  /// Entry that completes first (ties by allocation order), or nullptr.
  const MshrEntry* earliest() const;
  const std::vector<MshrEntry>& entries() const { return entries_; }

private:
  std::size_t capacity_;
  std::uint64_t next_sequence_ = 0;
  std::vector<MshrEntry> entries_;
};

struct EvictionReport {
  std::optional<address_t> evicted_block; // a Valid block displaced by the fill
  bool writeback = false;
  bool evicted_unused_prefetch = false;
  bool reused_expired_frame = false;
};

struct MigrationReport {
  bool performed = false;
  std::size_t blocks_migrated = 0;
  cycle_t overhead_cycles = 0;
  Femtojoules overhead_energy;
};

/// Set-associative, write-back, write-allocate L1 data cache whose blocks expire
/// `retention` after they were written. Strict LRU replacement over all frames
/// that hold a tag (valid or expired); invalid frames are filled first.
class Cache
{
public:
  Cache(CacheGeometry geometry, RetentionConfig retention, CacheTiming timing = {});

  /// Demand access at `now`. Completes fills that are ready, lazily expires the
  /// indexed set, then looks up. A miss with a full MSHR stalls until an entry frees.
  AccessResult access(const TraceEvent& event, cycle_t now);

  /// Installs the block for a ready MSHR entry. Throws std::logic_error when
  /// there is no such entry or it is not ready yet.
  EvictionReport fill(address_t block_address, Origin origin, cycle_t now);

  /// Sends a prefetch to memory. False when the MSHR is full or the block is
  /// already outstanding or live.
  bool issue_prefetch(address_t block_address, cycle_t now);

  /// Migrates the contents to a unit with another retention time. A request for
  /// the current configuration is rejected (no-op, nothing charged).
  MigrationReport switch_retention(const RetentionConfig& next, cycle_t now);

  /// Expires every block whose expiry has passed, across all sets.
  std::vector<ExpiredBlock> drain_expired(cycle_t now);

  /// Completes every MSHR entry with ready_cycle <= now, in completion order.
  std::vector<BlockFill> advance(cycle_t now);

  /// Completes all outstanding requests, drains expirations and closes the
  /// leakage interval. Returns the final cycle.
  cycle_t finish(cycle_t now);

  /// Accrues leakage up to `now` under the active configuration.
  void close_leakage(cycle_t now);

  bool is_live(address_t block_address, cycle_t now) const;   // valid and not yet expired
  bool holds_tag(address_t block_address) const;             // valid or expired copy in a frame
  bool is_outstanding(address_t block_address) const { return mshr_.find(block_align(block_address)) != nullptr; }

  address_t block_align(address_t a) const { return a & ~(geometry_.block_size - 1); }
  std::uint64_t set_index(address_t a) const { return (a >> offset_bits_) & (sets_ - 1); }
  std::uint64_t tag_of(address_t a) const { return a >> offset_bits_; }

  const CacheGeometry& geometry() const { return geometry_; }
  const CacheTiming& timing() const { return timing_; }
  const RetentionConfig& retention() const { return retention_; }
  cycle_t retention_cycles() const { return retention_cycles_; }
  const CounterSet& counters() const { return counters_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const Mshr& mshr() const { return mshr_; }
  std::size_t valid_blocks() const;
  std::size_t resident_unused_prefetches() const;
  /// Read-only view of one set's frames.
  std::span<const CacheBlock> set_view(std::uint64_t set) const;

private:
  std::span<CacheBlock> set_span(std::uint64_t set);
  void expire_set(std::uint64_t set, cycle_t now, std::vector<ExpiredBlock>* out);
  void expire_block(CacheBlock& blk, std::vector<ExpiredBlock>* out);
  void touch(CacheBlock& blk) { blk.lru_stamp = ++lru_clock_; }
  void start_leakage_if_needed(cycle_t now);
  EvictionReport install(MshrEntry entry, cycle_t at, std::vector<ExpiredBlock>* expired);

  CacheGeometry geometry_;
  CacheTiming timing_;
  RetentionConfig retention_;
  cycle_t retention_cycles_;
  std::uint64_t sets_;
  unsigned offset_bits_;
  std::vector<CacheBlock> blocks_;
  Mshr mshr_;
  CounterSet counters_;
  EnergyLedger ledger_;
  std::uint64_t lru_clock_ = 0;
  std::optional<cycle_t> leakage_from_;
};
} // namespace sttsim

#endif
