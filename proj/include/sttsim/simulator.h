#ifndef STTSIM_SIMULATOR_H
#define STTSIM_SIMULATOR_H

#include <optional>
#include <span>

#include "sttsim/cache.h"
#include "sttsim/energy.h"
#include "sttsim/prefetch.h"
#include "sttsim/trace.h"

namespace sttsim
{
struct SimConfig {
  CacheGeometry geometry;
  CacheTiming timing;
};

enum class DistanceControl { Static, Nst };

struct PrefetchMode {
  bool enabled = false;
  unsigned degree = 4;
  unsigned distance = 16;
  DistanceControl control = DistanceControl::Static;
  bool trigger_on_expiration_miss = true;
  NstThresholds nst;

  static PrefetchMode off() { return {}; }
  static PrefetchMode fixed(unsigned degree, unsigned distance, bool trigger_on_expiration_miss = true)
  {
    return {true, degree, distance, DistanceControl::Static, trigger_on_expiration_miss, {}};
  }
  static PrefetchMode throttled(unsigned degree, NstThresholds nst = {}, bool trigger_on_expiration_miss = true)
  {
    return {true, degree, kPrefetchDistances.front(), DistanceControl::Nst, trigger_on_expiration_miss, nst};
  }
};

/// Drives one cache (and optional prefetcher) along a trace. Trace cycles set
/// the timeline; an MSHR stall pushes every later event back by the stall.
class Simulator
{
public:
  Simulator(const SimConfig& config, const RetentionConfig& retention, PrefetchMode mode = PrefetchMode::off());

  void step(const TraceEvent& event);
  void run(std::span<const TraceEvent> events);

  /// Keeps the trained stride table when the prefetcher stays enabled.
  void set_prefetch_mode(const PrefetchMode& mode);
  const PrefetchMode& prefetch_mode() const { return mode_; }
  unsigned current_distance() const;
  const NstState& nst_state() const { return nst_; }

  MigrationReport switch_retention(const RetentionConfig& next) { return cache_.switch_retention(next, clock_); }
  std::vector<ExpiredBlock> drain_expired() { return cache_.drain_expired(clock_); }
  /// Brings the leakage account up to the current clock.
  void checkpoint() { cache_.close_leakage(clock_); }
  cycle_t finish();

  cycle_t clock() const { return clock_; }
  const Cache& cache() const { return cache_; }
  const CounterSet& counters() const { return cache_.counters(); }
  const EnergyLedger& ledger() const { return cache_.ledger(); }
  EnergyReport report() const { return make_report(cache_.ledger(), cache_.timing().clock_hz); }

private:
  void nst_window_check();

  Cache cache_;
  PrefetchMode mode_;
  std::optional<StridePrefetcher> prefetcher_;
  NstState nst_;
  std::uint64_t window_demands_ = 0;
  CounterSet window_start_;
  cycle_t clock_ = 0;
};
} // namespace sttsim

#endif
