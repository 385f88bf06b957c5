#include "sttsim/simulator.h"

#include <algorithm>

namespace sttsim
{
Simulator::Simulator(const SimConfig& config, const RetentionConfig& retention, PrefetchMode mode)
    : cache_(config.geometry, retention, config.timing)
{
  set_prefetch_mode(mode);
}

void Simulator::set_prefetch_mode(const PrefetchMode& mode)
{
  mode_ = mode;
  if (!mode.enabled) {
    prefetcher_.reset();
    return;
  }
  PrefetchConfig cfg{mode.degree, mode.distance, mode.trigger_on_expiration_miss};
  if (mode.control == DistanceControl::Nst) {
    nst_ = NstState{};
    nst_.thresholds = mode.nst;
    cfg.distance = nst_.current_distance;
    window_demands_ = 0;
    window_start_ = cache_.counters();
  }
  if (prefetcher_ && prefetcher_->config().trigger_on_expiration_miss == cfg.trigger_on_expiration_miss &&
      prefetcher_->config().table_entries == cfg.table_entries) {
    prefetcher_->set_degree(cfg.degree);
    prefetcher_->set_distance(cfg.distance);
  } else {
    prefetcher_.emplace(cfg, cache_.geometry().block_size);
  }
}

unsigned Simulator::current_distance() const { return prefetcher_ ? prefetcher_->distance() : 0; }

void Simulator::step(const TraceEvent& event)
{
  const cycle_t now = std::max(event.cycle, clock_);
  const auto result = cache_.access(event, now);
  clock_ = now + result.stall_cycles;

  if (!prefetcher_)
    return;
  for (const auto& req : prefetcher_->observe(event, result, cache_, clock_))
    cache_.issue_prefetch(req.block_address, clock_);

  if (mode_.control == DistanceControl::Nst)
    nst_window_check();
}

void Simulator::nst_window_check()
{
  if (++window_demands_ < nst_.thresholds.window_demand_accesses)
    return;
  const auto delta = cache_.counters() - window_start_;
  const auto distance = nst_update(nst_, {delta.late_prefetches, delta.total_prefetches});
  prefetcher_->set_distance(distance);
  window_demands_ = 0;
  window_start_ = cache_.counters();
}

void Simulator::run(std::span<const TraceEvent> events)
{
  for (const auto& e : events)
    step(e);
}

cycle_t Simulator::finish()
{
  clock_ = cache_.finish(clock_);
  return clock_;
}
} // namespace sttsim
