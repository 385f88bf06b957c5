#include "sttsim/energy.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace sttsim
{
cycle_t RetentionConfig::retention_cycles(std::uint64_t clock_hz) const
{
  if (never_expires())
    return kNeverCycle;
  const auto cycles = static_cast<unsigned __int128>(retention_ns) * clock_hz / 1'000'000'000ULL;
  return cycles >= kNeverCycle ? kNeverCycle : static_cast<cycle_t>(cycles);
}

void RetentionConfig::validate() const
{
  if (label.empty())
    throw std::invalid_argument("retention config has no label");
  if (write_energy.value <= 0 || hit_energy.value <= 0 || leakage_uw <= 0 || hit_latency == 0 || write_latency == 0)
    throw std::invalid_argument("retention config '" + label + "' has a non-positive constant");
}

namespace devices
{
namespace
{
RetentionConfig make(std::string label, std::uint64_t ns, std::int64_t write_milli_nj, std::int64_t hit_milli_nj, std::int64_t leak_uw, cycle_t hit_lat,
                     cycle_t write_lat)
{
  return RetentionConfig{std::move(label), ns, Femtojoules::from_nj_milli(write_milli_nj), Femtojoules::from_nj_milli(hit_milli_nj), leak_uw, hit_lat, write_lat};
}

std::string lowered(std::string_view s)
{
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    // fold the UTF-8 micro sign (C2 B5) and Greek mu (CE BC) to 'u'
    if (i + 1 < s.size() && ((s[i] == '\xC2' && s[i + 1] == '\xB5') || (s[i] == '\xCE' && s[i + 1] == '\xBC'))) {
      out.push_back('u');
      ++i;
      continue;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  }
  return out;
}
} // namespace

// 22nm, 32KB 4-way, values per access; leakage in microwatts.
RetentionConfig sram() { return make("SRAM", 0, 2, 8, 75'968, 2, 2); }
RetentionConfig stt_25us() { return make("STT-25us", 25'000, 6, 5, 11'778, 1, 2); }
RetentionConfig stt_50us() { return make("STT-50us", 50'000, 7, 5, 11'778, 1, 3); }
RetentionConfig stt_75us() { return make("STT-75us", 75'000, 7, 5, 11'778, 1, 3); }
RetentionConfig stt_100us() { return make("STT-100us", 100'000, 8, 5, 11'778, 1, 3); }
RetentionConfig stt_1ms() { return make("STT-1ms", 1'000'000, 11, 5, 11'365, 1, 4); }

std::vector<RetentionConfig> all() { return {sram(), stt_25us(), stt_50us(), stt_75us(), stt_100us(), stt_1ms()}; }

std::optional<RetentionConfig> find(std::string_view name)
{
  auto key = lowered(name);
  if (key.starts_with("stt-"))
    key = key.substr(4);
  for (auto& cfg : all()) {
    auto label = lowered(cfg.label);
    if (label.starts_with("stt-"))
      label = label.substr(4);
    if (label == key)
      return cfg;
  }
  return std::nullopt;
}
} // namespace devices

double CounterSet::miss_rate() const
{
  return demand_accesses == 0 ? 0.0 : static_cast<double>(demand_misses) / static_cast<double>(demand_accesses);
}

#define STTSIM_COUNTER_FIELDS(X)                                                                                                                               \
  X(total_prefetches)                                                                                                                                          \
  X(total_mshr_requests)                                                                                                                                       \
  X(expired_unused_prefetches)                                                                                                                                 \
  X(demand_accesses)                                                                                                                                           \
  X(demand_hits)                                                                                                                                               \
  X(demand_misses)                                                                                                                                             \
  X(expiration_misses)                                                                                                                                         \
  X(late_prefetches)                                                                                                                                           \
  X(writebacks)                                                                                                                                                \
  X(prefetchable_expired_reloads)                                                                                                                              \
  X(merged_demand_misses)                                                                                                                                      \
  X(demand_fills)                                                                                                                                              \
  X(prefetch_fills)                                                                                                                                            \
  X(evictions)                                                                                                                                                 \
  X(expirations)                                                                                                                                               \
  X(timely_prefetches)                                                                                                                                         \
  X(unused_evicted_prefetches)                                                                                                                                 \
  X(dropped_prefetches)                                                                                                                                        \
  X(stall_cycles)

CounterSet& CounterSet::operator+=(const CounterSet& o)
{
#define ADD(f) f += o.f;
  STTSIM_COUNTER_FIELDS(ADD)
#undef ADD
  return *this;
}

CounterSet& CounterSet::operator-=(const CounterSet& o)
{
#define SUB(f) f -= o.f;
  STTSIM_COUNTER_FIELDS(SUB)
#undef SUB
  return *this;
}

PrefetchRatios ratios(const CounterSet& c)
{
  PrefetchRatios r;
  if (c.total_mshr_requests != 0)
    r.all_pf = static_cast<double>(c.total_prefetches) / static_cast<double>(c.total_mshr_requests);
  if (c.total_prefetches != 0)
    r.expired_pf = static_cast<double>(c.expired_unused_prefetches) / static_cast<double>(c.total_prefetches);
  return r;
}

void EnergyLedger::record(EnergyEvent e, const RetentionConfig& cfg, std::uint64_t count)
{
  const auto n = static_cast<std::int64_t>(count);
  switch (e) {
  case EnergyEvent::Hit:
    dynamic += cfg.hit_energy * n;
    break;
  case EnergyEvent::Write:
  case EnergyEvent::Fill:
  case EnergyEvent::Writeback:
    dynamic += cfg.write_energy * n;
    break;
  }
}

void EnergyLedger::accrue_leakage(const RetentionConfig& cfg, cycle_t cycles)
{
  leakage_uw_cycles += cfg.leakage_uw * static_cast<std::int64_t>(cycles);
  elapsed_cycles += cycles;
}

void EnergyLedger::charge_migration()
{
  migration += kMigrationEnergy;
  migration_cycles += kMigrationCycles;
  ++migrations;
}

EnergyLedger& EnergyLedger::operator+=(const EnergyLedger& o)
{
  dynamic += o.dynamic;
  migration += o.migration;
  leakage_uw_cycles += o.leakage_uw_cycles;
  elapsed_cycles += o.elapsed_cycles;
  demand_latency_cycles += o.demand_latency_cycles;
  migration_cycles += o.migration_cycles;
  migrations += o.migrations;
  return *this;
}

EnergyLedger& EnergyLedger::operator-=(const EnergyLedger& o)
{
  dynamic -= o.dynamic;
  migration -= o.migration;
  leakage_uw_cycles -= o.leakage_uw_cycles;
  elapsed_cycles -= o.elapsed_cycles;
  demand_latency_cycles -= o.demand_latency_cycles;
  migration_cycles -= o.migration_cycles;
  migrations -= o.migrations;
  return *this;
}

EnergyReport make_report(const EnergyLedger& ledger, std::uint64_t clock_hz)
{
  if (clock_hz == 0)
    throw std::invalid_argument("clock frequency must be positive");
  // 1 uW for 1 s is 1e9 fJ; round to the nearest femtojoule.
  const auto scaled = static_cast<__int128>(ledger.leakage_uw_cycles) * 1'000'000'000LL;
  const auto half = static_cast<__int128>(clock_hz / 2);
  const auto leak = static_cast<std::int64_t>((scaled + half) / static_cast<__int128>(clock_hz));

  EnergyReport r;
  r.dynamic = ledger.dynamic;
  r.leakage = Femtojoules{leak};
  r.migration = ledger.migration;
  r.total = r.dynamic + r.leakage + r.migration;
  r.total_latency_cycles = ledger.demand_latency_cycles + ledger.migration_cycles;
  return r;
}

std::vector<NormalizedRow> compare(std::span<const LabeledReport> reports, std::size_t baseline)
{
  if (reports.size() < 2)
    throw std::invalid_argument("comparison needs at least two reports");
  if (baseline >= reports.size())
    throw std::out_of_range("baseline index out of range");
  const auto& base = reports[baseline].report;
  if (base.total.value == 0)
    throw std::domain_error("baseline '" + reports[baseline].label + "' has zero total energy");
  if (base.total_latency_cycles == 0)
    throw std::domain_error("baseline '" + reports[baseline].label + "' has zero total latency");

  std::vector<NormalizedRow> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i == baseline)
      continue;
    NormalizedRow row;
    row.label = reports[i].label;
    row.energy_ratio = static_cast<double>(reports[i].report.total.value) / static_cast<double>(base.total.value);
    row.latency_ratio = static_cast<double>(reports[i].report.total_latency_cycles) / static_cast<double>(base.total_latency_cycles);
    row.energy_reduction_pct = (1.0 - row.energy_ratio) * 100.0;
    row.latency_reduction_pct = (1.0 - row.latency_ratio) * 100.0;
    rows.push_back(row);
  }
  return rows;
}
} // namespace sttsim
