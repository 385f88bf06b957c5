#include "sttsim/prefetch.h"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace sttsim
{
bool is_valid_distance(unsigned distance)
{
  return std::find(kPrefetchDistances.begin(), kPrefetchDistances.end(), distance) != kPrefetchDistances.end();
}

void PrefetchConfig::validate() const
{
  if (degree == 0)
    throw std::invalid_argument("prefetch degree must be at least 1");
  if (!is_valid_distance(distance))
    throw std::invalid_argument("prefetch distance must be one of 1, 4, 8, 16, 32 (got " + std::to_string(distance) + ")");
  if (table_entries == 0)
    throw std::invalid_argument("stride table needs at least one entry");
}

StridePrefetcher::StridePrefetcher(PrefetchConfig config, std::uint64_t block_size)
    : config_(config), offset_bits_(static_cast<unsigned>(std::countr_zero(block_size))), table_(config.table_entries)
{
  config_.validate();
  if (!std::has_single_bit(block_size))
    throw std::invalid_argument("block size must be a power of two");
}

void StridePrefetcher::set_distance(unsigned distance)
{
  if (!is_valid_distance(distance))
    throw std::invalid_argument("prefetch distance must be one of 1, 4, 8, 16, 32");
  config_.distance = distance;
}

void StridePrefetcher::set_degree(unsigned degree)
{
  if (degree == 0)
    throw std::invalid_argument("prefetch degree must be at least 1");
  config_.degree = degree;
}

bool StridePrefetcher::suppressed(address_t block, const Cache& cache, cycle_t now) const
{
  if (cache.is_outstanding(block) || cache.is_live(block, now))
    return true;
  // A conventional prefetcher sees the (expired) tag and assumes the block is cached.
  return !config_.trigger_on_expiration_miss && cache.holds_tag(block);
}

std::vector<PrefetchRequest> StridePrefetcher::observe(const TraceEvent& event, const AccessResult& result, const Cache& cache, cycle_t now)
{
  auto& e = table_[event.pc % table_.size()];
  if (!e.valid || e.pc != event.pc) {
    e = StrideEntry{true, event.pc, event.address, 0, 0, std::nullopt};
    return {};
  }

  const auto delta = static_cast<std::int64_t>(event.address - e.last_address);
  if (delta != 0) {
    if (delta == e.stride) {
      e.confidence = static_cast<std::uint8_t>(std::min<int>(kConfidenceMax, e.confidence + 1));
    } else if (e.confidence >= kConfidenceThreshold) {
      --e.confidence;
    } else {
      e.stride = delta;
      e.confidence = 1;
      e.frontier_block.reset();
    }
    e.last_address = event.address;
  }

  const bool expiration_miss = !result.hit && result.miss_class == MissClass::Expiration;
  const bool trigger = result.first_use_of_prefetch || (!result.hit && (!expiration_miss || config_.trigger_on_expiration_miss));
  if (!trigger || e.confidence < kConfidenceThreshold || e.stride == 0)
    return {};

  std::int64_t block_stride = e.stride / (std::int64_t{1} << offset_bits_);
  if (block_stride == 0)
    block_stride = e.stride > 0 ? 1 : -1;
  const auto demand_block = static_cast<std::int64_t>(event.address >> offset_bits_);
  const auto distance = static_cast<std::int64_t>(config_.distance);

  std::int64_t k = 1;
  if (e.frontier_block) {
    const auto ahead = *e.frontier_block - demand_block;
    if (ahead % block_stride == 0) {
      const auto steps = ahead / block_stride;
      if (steps >= 0 && steps <= distance)
        k = steps + 1;
    }
  }

  std::vector<PrefetchRequest> out;
  for (; k <= distance && out.size() < config_.degree; ++k) {
    const auto target = demand_block + k * block_stride;
    if (target < 0)
      break;
    e.frontier_block = target;
    const auto block = static_cast<address_t>(target) << offset_bits_;
    if (suppressed(block, cache, now))
      continue;
    out.push_back({block, event.pc, now});
  }
  return out;
}

PrefetchTimeliness classify_prefetch_timeliness(cycle_t ready_cycle, cycle_t expiry_cycle, std::optional<cycle_t> first_demand_use)
{
  if (!first_demand_use)
    return PrefetchTimeliness::Unused;
  if (*first_demand_use < ready_cycle)
    return PrefetchTimeliness::Late;
  if (*first_demand_use < expiry_cycle)
    return PrefetchTimeliness::Timely;
  return PrefetchTimeliness::Unused;
}

unsigned nst_update(NstState& state, const NstWindowStats& window)
{
  ++state.windows_seen;
  if (window.total_prefetches == 0)
    return state.current_distance;

  const double lateness = static_cast<double>(window.late_prefetches) / static_cast<double>(window.total_prefetches);
  auto it = std::find(kPrefetchDistances.begin(), kPrefetchDistances.end(), state.current_distance);
  if (it == kPrefetchDistances.end())
    throw std::logic_error("NST distance left the allowed set");
  if (lateness > state.thresholds.raise_above) {
    if (std::next(it) != kPrefetchDistances.end())
      ++it;
  } else if (lateness < state.thresholds.lower_below) {
    if (it != kPrefetchDistances.begin())
      --it;
  }
  state.current_distance = *it;
  return state.current_distance;
}
} // namespace sttsim
