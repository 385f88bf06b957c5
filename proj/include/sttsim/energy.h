#ifndef STTSIM_ENERGY_H
#define STTSIM_ENERGY_H

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sttsim/types.h"

namespace sttsim
{
// Energy is kept in integer femtojoules (1e-6 nJ) so that ledgers add exactly.
struct Femtojoules {
  std::int64_t value = 0;

  static constexpr Femtojoules from_nj_milli(std::int64_t thousandths_of_nj) { return {thousandths_of_nj * 1'000}; }
  constexpr double nanojoules() const { return static_cast<double>(value) * 1e-6; }

  constexpr Femtojoules& operator+=(Femtojoules o)
  {
    value += o.value;
    return *this;
  }
  constexpr Femtojoules& operator-=(Femtojoules o)
  {
    value -= o.value;
    return *this;
  }
  friend constexpr Femtojoules operator+(Femtojoules a, Femtojoules b) { return a += b; }
  friend constexpr Femtojoules operator-(Femtojoules a, Femtojoules b) { return a -= b; }
  friend constexpr Femtojoules operator*(Femtojoules a, std::int64_t n) { return {a.value * n}; }
  friend constexpr auto operator<=>(Femtojoules, Femtojoules) = default;
};

/// One retention-time operating point of the cache array and its device constants.
struct RetentionConfig {
  std::string label;
  std::uint64_t retention_ns = 0; // 0 means the cells never expire (SRAM)
  Femtojoules write_energy;
  Femtojoules hit_energy;
  std::int64_t leakage_uw = 0;
  cycle_t hit_latency = 1;
  cycle_t write_latency = 1;

  bool never_expires() const { return retention_ns == 0; }
  cycle_t retention_cycles(std::uint64_t clock_hz) const;
  void validate() const;

  friend bool operator==(const RetentionConfig&, const RetentionConfig&) = default;
};

namespace devices
{
RetentionConfig sram();
RetentionConfig stt_25us();
RetentionConfig stt_50us();
RetentionConfig stt_75us();
RetentionConfig stt_100us();
RetentionConfig stt_1ms();

/// All six device columns, SRAM first, then STTRAM from shortest to longest retention.
std::vector<RetentionConfig> all();

/// Accepts "SRAM", "STT-25us", "25us", "25µs", "1ms", ... (case-insensitive).
std::optional<RetentionConfig> find(std::string_view name);
} // namespace devices

/// Event counters. Window statistics are differences of two snapshots.
struct CounterSet {
  std::uint64_t total_prefetches = 0;
  std::uint64_t total_mshr_requests = 0;
  std::uint64_t expired_unused_prefetches = 0;
  std::uint64_t demand_accesses = 0;
  std::uint64_t demand_hits = 0;
  std::uint64_t demand_misses = 0;
  std::uint64_t expiration_misses = 0;
  std::uint64_t late_prefetches = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t prefetchable_expired_reloads = 0;

  // bookkeeping beyond the tuning inputs
  std::uint64_t merged_demand_misses = 0;
  std::uint64_t demand_fills = 0;
  std::uint64_t prefetch_fills = 0;
  std::uint64_t evictions = 0;
  std::uint64_t expirations = 0;
  std::uint64_t timely_prefetches = 0;
  std::uint64_t unused_evicted_prefetches = 0;
  std::uint64_t dropped_prefetches = 0;
  std::uint64_t stall_cycles = 0;

  std::uint64_t fills() const { return demand_fills + prefetch_fills; }
  double miss_rate() const;

  CounterSet& operator+=(const CounterSet& o);
  CounterSet& operator-=(const CounterSet& o);
  friend CounterSet operator+(CounterSet a, const CounterSet& b) { return a += b; }
  friend CounterSet operator-(CounterSet a, const CounterSet& b) { return a -= b; }
  friend bool operator==(const CounterSet&, const CounterSet&) = default;
};

struct PrefetchRatios {
  double all_pf = 0.0;     // total prefetches / total MSHR requests
  double expired_pf = 0.0; // expired unused prefetches / total prefetches
};

PrefetchRatios ratios(const CounterSet& c);

enum class EnergyEvent { Hit, Write, Fill, Writeback };

inline constexpr cycle_t kMigrationCycles = 2560;
inline constexpr Femtojoules kMigrationEnergy{8'192'000}; // 8.192 nJ

/// Raw, additive accounting. Leakage is held as microwatt-cycles and only
/// converted to energy when a report is produced.
struct EnergyLedger {
  Femtojoules dynamic;
  Femtojoules migration;
  std::int64_t leakage_uw_cycles = 0;
  cycle_t elapsed_cycles = 0;
  cycle_t demand_latency_cycles = 0;
  cycle_t migration_cycles = 0;
  std::uint64_t migrations = 0;

  void record(EnergyEvent e, const RetentionConfig& cfg, std::uint64_t count = 1);
  void accrue_leakage(const RetentionConfig& cfg, cycle_t cycles);
  void add_demand_latency(cycle_t cycles) { demand_latency_cycles += cycles; }
  void charge_migration();

  EnergyLedger& operator+=(const EnergyLedger& o);
  EnergyLedger& operator-=(const EnergyLedger& o);
  friend EnergyLedger operator+(EnergyLedger a, const EnergyLedger& b) { return a += b; }
  friend EnergyLedger operator-(EnergyLedger a, const EnergyLedger& b) { return a -= b; }
  friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

struct EnergyReport {
  Femtojoules dynamic;
  Femtojoules leakage;
  Femtojoules migration;
  Femtojoules total; // dynamic + leakage + migration
  cycle_t total_latency_cycles = 0;

  double dynamic_nj() const { return dynamic.nanojoules(); }
  double leakage_nj() const { return leakage.nanojoules(); }
  double migration_nj() const { return migration.nanojoules(); }
  double total_nj() const { return total.nanojoules(); }
};

EnergyReport make_report(const EnergyLedger& ledger, std::uint64_t clock_hz);

struct LabeledReport {
  std::string label;
  EnergyReport report;
};

struct NormalizedRow {
  std::string label;
  double energy_ratio = 1.0;
  double latency_ratio = 1.0;
  double energy_reduction_pct = 0.0;
  double latency_reduction_pct = 0.0;
};

/// Normalizes every non-baseline report against reports[baseline].
/// Throws std::domain_error when the baseline energy or latency is zero.
std::vector<NormalizedRow> compare(std::span<const LabeledReport> reports, std::size_t baseline = 0);
} // namespace sttsim

#endif
