#include "sttsim/cache.h"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>
#include <string>

namespace sttsim
{
void CacheGeometry::validate() const
{
  auto pow2 = [](std::uint64_t v) { return v != 0 && std::has_single_bit(v); };
  if (!pow2(capacity) || !pow2(block_size) || !pow2(associativity))
    throw std::invalid_argument("cache capacity, block size and associativity must be powers of two");
  if (capacity % (block_size * associativity) != 0 || capacity < block_size * associativity)
    throw std::invalid_argument("cache capacity must be a multiple of block_size * associativity");
}

unsigned CacheGeometry::offset_bits() const { return static_cast<unsigned>(std::countr_zero(block_size)); }

MshrEntry* Mshr::find(address_t block_address)
{
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const MshrEntry& e) { return e.block_address == block_address; });
  return it == entries_.end() ? nullptr : &*it;
}

const MshrEntry* Mshr::find(address_t block_address) const
{
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const MshrEntry& e) { return e.block_address == block_address; });
  return it == entries_.end() ? nullptr : &*it;
}

MshrEntry* Mshr::allocate(address_t block_address, Origin origin, cycle_t issue, cycle_t ready)
{
  if (full() || find(block_address) != nullptr)
    return nullptr;
  entries_.push_back({block_address, origin, issue, ready, false, false, next_sequence_++});
  return &entries_.back();
}

void Mshr::retire(address_t block_address)
{
  std::erase_if(entries_, [&](const MshrEntry& e) { return e.block_address == block_address; });
}

const MshrEntry* Mshr::earliest() const
{
  auto it = std::min_element(entries_.begin(), entries_.end(),
                             [](const MshrEntry& a, const MshrEntry& b) { return std::tie(a.ready_cycle, a.sequence) < std::tie(b.ready_cycle, b.sequence); });
  return it == entries_.end() ? nullptr : &*it;
}

Cache::Cache(CacheGeometry geometry, RetentionConfig retention, CacheTiming timing)
    : geometry_(geometry), timing_(timing), retention_(std::move(retention)), retention_cycles_(0), sets_(0), offset_bits_(0), mshr_(timing.mshr_entries)
{
  geometry_.validate();
  retention_.validate();
  if (timing_.mshr_entries == 0)
    throw std::invalid_argument("MSHR needs at least one entry");
  if (timing_.clock_hz == 0)
    throw std::invalid_argument("clock frequency must be positive");
  retention_cycles_ = retention_.retention_cycles(timing_.clock_hz);
  sets_ = geometry_.sets();
  offset_bits_ = geometry_.offset_bits();
  blocks_.resize(sets_ * geometry_.associativity);
}

std::span<CacheBlock> Cache::set_span(std::uint64_t set) { return {blocks_.data() + set * geometry_.associativity, geometry_.associativity}; }

std::span<const CacheBlock> Cache::set_view(std::uint64_t set) const
{
  return {blocks_.data() + set * geometry_.associativity, geometry_.associativity};
}

void Cache::start_leakage_if_needed(cycle_t now)
{
  if (!leakage_from_)
    leakage_from_ = now;
}

void Cache::close_leakage(cycle_t now)
{
  if (!leakage_from_) {
    leakage_from_ = now;
    return;
  }
  if (now > *leakage_from_) {
    ledger_.accrue_leakage(retention_, now - *leakage_from_);
    leakage_from_ = now;
  }
}

void Cache::expire_block(CacheBlock& blk, std::vector<ExpiredBlock>* out)
{
  blk.state = BlockState::Expired;
  ++counters_.expirations;
  if (blk.dirty) {
    ++counters_.writebacks;
    ledger_.record(EnergyEvent::Writeback, retention_);
    blk.dirty = false;
  }
  const bool unused = blk.prefetched;
  if (unused)
    ++counters_.expired_unused_prefetches;
  blk.prefetched = false;
  blk.reloaded_after_expiry = false;
  if (out)
    out->push_back({blk.tag << offset_bits_, unused});
}

void Cache::expire_set(std::uint64_t set, cycle_t now, std::vector<ExpiredBlock>* out)
{
  for (auto& blk : set_span(set)) {
    if (blk.state == BlockState::Valid && blk.expiry_cycle <= now)
      expire_block(blk, out);
  }
}

std::vector<ExpiredBlock> Cache::drain_expired(cycle_t now)
{
  advance(now);
  std::vector<ExpiredBlock> out;
  for (std::uint64_t s = 0; s < sets_; ++s)
    expire_set(s, now, &out);
  return out;
}

EvictionReport Cache::install(MshrEntry entry, cycle_t at, std::vector<ExpiredBlock>* expired)
{
  const auto set = set_index(entry.block_address);
  const auto tag = tag_of(entry.block_address);
  expire_set(set, at, expired);

  auto frames = set_span(set);
  EvictionReport report;
  auto victim = std::find_if(frames.begin(), frames.end(), [&](const CacheBlock& b) { return b.state != BlockState::Invalid && b.tag == tag; });
  if (victim != frames.end()) {
    assert(victim->state == BlockState::Expired);
    report.reused_expired_frame = true;
  } else {
    victim = std::find_if(frames.begin(), frames.end(), [](const CacheBlock& b) { return b.state == BlockState::Invalid; });
    if (victim == frames.end())
      victim = std::min_element(frames.begin(), frames.end(), [](const CacheBlock& a, const CacheBlock& b) { return a.lru_stamp < b.lru_stamp; });
  }

  if (victim->state == BlockState::Valid) {
    ++counters_.evictions;
    report.evicted_block = victim->tag << offset_bits_;
    if (victim->dirty) {
      ++counters_.writebacks;
      ledger_.record(EnergyEvent::Writeback, retention_);
      report.writeback = true;
    }
    if (victim->prefetched) {
      ++counters_.unused_evicted_prefetches;
      report.evicted_unused_prefetch = true;
    }
  }

  const bool by_prefetch = entry.origin == Origin::Prefetch && !entry.demand_merged;
  CacheBlock& blk = *victim;
  blk.reloaded_after_expiry = by_prefetch && report.reused_expired_frame;
  blk.tag = tag;
  blk.state = BlockState::Valid;
  blk.dirty = entry.write;
  blk.prefetched = by_prefetch;
  blk.fill_cycle = at;
  blk.expiry_cycle = saturating_add(at, retention_cycles_);
  touch(blk);

  if (entry.origin == Origin::Prefetch)
    ++counters_.prefetch_fills;
  else
    ++counters_.demand_fills;
  ledger_.record(EnergyEvent::Fill, retention_);
  mshr_.retire(entry.block_address);
  return report;
}

EvictionReport Cache::fill(address_t block_address, Origin origin, cycle_t now)
{
  const auto* entry = mshr_.find(block_align(block_address));
  if (entry == nullptr)
    throw std::logic_error("fill without an outstanding MSHR entry for block 0x" + std::to_string(block_address));
  if (entry->ready_cycle > now)
    throw std::logic_error("fill before the MSHR entry is ready");
  if (entry->origin != origin)
    throw std::logic_error("fill origin does not match the MSHR entry");
  start_leakage_if_needed(now);
  return install(*entry, now, nullptr);
}

std::vector<BlockFill> Cache::advance(cycle_t now)
{
  std::vector<BlockFill> fills;
  while (const auto* e = mshr_.earliest()) {
    if (e->ready_cycle > now)
      break;
    const MshrEntry entry = *e;
    install(entry, entry.ready_cycle, nullptr);
    fills.push_back({entry.block_address, entry.origin, entry.ready_cycle});
  }
  return fills;
}

AccessResult Cache::access(const TraceEvent& event, cycle_t now)
{
  start_leakage_if_needed(now);
  AccessResult r;
  r.fills = advance(now);

  const auto block = block_align(event.address);
  const auto set = set_index(block);
  const auto tag = tag_of(block);
  expire_set(set, now, &r.expirations);
  ++counters_.demand_accesses;

  auto frames = set_span(set);
  auto it = std::find_if(frames.begin(), frames.end(), [&](const CacheBlock& b) { return b.state != BlockState::Invalid && b.tag == tag; });

  if (it != frames.end() && it->state == BlockState::Valid) {
    r.hit = true;
    ++counters_.demand_hits;
    touch(*it);
    ledger_.record(EnergyEvent::Hit, retention_);
    if (event.kind == AccessKind::Write) {
      r.latency_cycles = retention_.write_latency;
      ledger_.record(EnergyEvent::Write, retention_);
      it->dirty = true;
      it->fill_cycle = now;
      it->expiry_cycle = saturating_add(now, retention_cycles_);
    } else {
      r.latency_cycles = retention_.hit_latency;
    }
    if (it->prefetched) {
      it->prefetched = false;
      r.first_use_of_prefetch = true;
      ++counters_.timely_prefetches;
      if (it->reloaded_after_expiry)
        ++counters_.prefetchable_expired_reloads;
    }
    it->reloaded_after_expiry = false;
    ledger_.add_demand_latency(r.latency_cycles);
    return r;
  }

  ++counters_.demand_misses;
  const bool expired_copy = it != frames.end();
  r.miss_class = expired_copy ? MissClass::Expiration : MissClass::NonExpiration;
  if (expired_copy)
    ++counters_.expiration_misses;

  if (auto* entry = mshr_.find(block)) {
    r.merged = true;
    ++counters_.merged_demand_misses;
    if (entry->origin == Origin::Prefetch && !entry->demand_merged) {
      r.late_prefetch = true;
      ++counters_.late_prefetches;
    }
    entry->demand_merged = true;
    entry->write = entry->write || event.kind == AccessKind::Write;
    r.latency_cycles = entry->ready_cycle - now;
  } else {
    cycle_t issue = now;
    while (mshr_.full()) {
      issue = std::max(issue, mshr_.earliest()->ready_cycle);
      auto freed = advance(issue);
      r.fills.insert(r.fills.end(), freed.begin(), freed.end());
    }
    r.stall_cycles = issue - now;
    auto* fresh = mshr_.allocate(block, Origin::Demand, issue, issue + timing_.memory_latency);
    assert(fresh != nullptr);
    fresh->write = event.kind == AccessKind::Write;
    ++counters_.total_mshr_requests;
    counters_.stall_cycles += r.stall_cycles;
    r.latency_cycles = r.stall_cycles + timing_.memory_latency;
  }
  ledger_.add_demand_latency(r.latency_cycles);
  return r;
}

bool Cache::issue_prefetch(address_t block_address, cycle_t now)
{
  start_leakage_if_needed(now);
  advance(now);
  const auto block = block_align(block_address);
  if (mshr_.find(block) != nullptr || is_live(block, now))
    return false;
  if (mshr_.full()) {
    ++counters_.dropped_prefetches;
    return false;
  }
  mshr_.allocate(block, Origin::Prefetch, now, now + timing_.memory_latency);
  ++counters_.total_prefetches;
  ++counters_.total_mshr_requests;
  return true;
}

MigrationReport Cache::switch_retention(const RetentionConfig& next, cycle_t now)
{
  MigrationReport report;
  if (next.label == retention_.label)
    return report;
  next.validate();
  start_leakage_if_needed(now);
  advance(now);
  drain_expired(now);
  close_leakage(now);

  retention_ = next;
  retention_cycles_ = retention_.retention_cycles(timing_.clock_hz);
  for (auto& blk : blocks_) {
    if (blk.state != BlockState::Valid)
      continue;
    blk.fill_cycle = now;
    blk.expiry_cycle = saturating_add(now, retention_cycles_);
    ++report.blocks_migrated;
  }
  ledger_.charge_migration();
  report.performed = true;
  report.overhead_cycles = kMigrationCycles;
  report.overhead_energy = kMigrationEnergy;
  return report;
}

cycle_t Cache::finish(cycle_t now)
{
  cycle_t end = now;
  for (const auto& e : mshr_.entries())
    end = std::max(end, e.ready_cycle);
  advance(end);
  drain_expired(end);
  close_leakage(end);
  return end;
}

bool Cache::is_live(address_t block_address, cycle_t now) const
{
  const auto block = block_align(block_address);
  const auto tag = tag_of(block);
  for (const auto& b : set_view(set_index(block))) {
    if (b.state == BlockState::Valid && b.tag == tag)
      return b.expiry_cycle > now;
  }
  return false;
}

bool Cache::holds_tag(address_t block_address) const
{
  const auto block = block_align(block_address);
  const auto tag = tag_of(block);
  const auto frames = set_view(set_index(block));
  return std::any_of(frames.begin(), frames.end(), [&](const CacheBlock& b) { return b.state != BlockState::Invalid && b.tag == tag; });
}

std::size_t Cache::valid_blocks() const
{
  return static_cast<std::size_t>(std::count_if(blocks_.begin(), blocks_.end(), [](const CacheBlock& b) { return b.state == BlockState::Valid; }));
}

std::size_t Cache::resident_unused_prefetches() const
{
  return static_cast<std::size_t>(
      std::count_if(blocks_.begin(), blocks_.end(), [](const CacheBlock& b) { return b.state == BlockState::Valid && b.prefetched; }));
}
} // namespace sttsim
