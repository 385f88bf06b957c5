#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sttsim/prefetch.h"
#include "sttsim/simulator.h"

using namespace sttsim;

namespace
{
constexpr std::uint64_t kPc = 0x504;

TraceEvent rd(address_t a, cycle_t c, std::uint64_t pc = kPc) { return {c, pc, a, AccessKind::Read}; }

std::vector<address_t> blocks_of(const std::vector<PrefetchRequest>& reqs)
{
  std::vector<address_t> out;
  for (const auto& r : reqs)
    out.push_back(r.block_address / 64);
  return out;
}

// Runs demand reads through a cache and prefetcher, issuing what the
// prefetcher asks for, and returns the requests made on the last read.
std::vector<PrefetchRequest> drive(Cache& cache, StridePrefetcher& pf, const std::vector<TraceEvent>& events)
{
  std::vector<PrefetchRequest> last;
  for (const auto& e : events) {
    const auto r = cache.access(e, e.cycle);
    last = pf.observe(e, r, cache, e.cycle);
    for (const auto& q : last)
      cache.issue_prefetch(q.block_address, e.cycle);
  }
  return last;
}
} // namespace

TEST_CASE("config validation", "[prefetch]")
{
  CHECK_NOTHROW(PrefetchConfig{}.validate());
  CHECK_THROWS_AS((PrefetchConfig{0, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PrefetchConfig{4, 5}.validate()), std::invalid_argument);
  for (unsigned d : {1U, 4U, 8U, 16U, 32U})
    CHECK(is_valid_distance(d));
  CHECK_FALSE(is_valid_distance(2));
  CHECK_FALSE(is_valid_distance(0));
}

TEST_CASE("confident stream requests the next blocks up to the distance", "[prefetch]")
{
  Cache cache({}, devices::stt_1ms());
  StridePrefetcher pf({4, 4}, 64);
  const auto reqs = drive(cache, pf, {rd(0, 0), rd(64, 200), rd(128, 400)});
  CHECK(blocks_of(reqs) == std::vector<address_t>{3, 4, 5, 6});
  for (const auto& r : reqs) {
    CHECK(r.trigger_pc == kPc);
    CHECK(r.issue_cycle == 400);
  }
}

TEST_CASE("no requests before the stride is confirmed", "[prefetch]")
{
  Cache cache({}, devices::stt_1ms());
  StridePrefetcher pf({4, 4}, 64);
  CHECK(drive(cache, pf, {rd(0, 0)}).empty());
  CHECK(drive(cache, pf, {rd(64, 200)}).empty());
  CHECK(pf.entry_for(kPc).confidence == 1);
}

TEST_CASE("prefetched blocks do not train the table", "[prefetch]")
{
  Cache cache({}, devices::stt_1ms());
  StridePrefetcher pf({4, 4}, 64);
  drive(cache, pf, {rd(0, 0), rd(64, 200), rd(128, 400)});
  const auto entry = pf.entry_for(kPc);
  CHECK(entry.last_address == 128);
  CHECK(entry.stride == 64);
}

TEST_CASE("expired copies do not suppress prefetches when reload is enabled", "[prefetch]")
{
  Cache cache({}, devices::stt_25us(), CacheTiming{0});
  for (address_t b : {3, 4, 5})
    cache.access(rd(b * 64, 0, 0x600), 0);
  cache.advance(1);
  StridePrefetcher pf({4, 4, true}, 64);
  const auto reqs = drive(cache, pf, {rd(0, 100'000), rd(64, 100'200), rd(128, 100'400)});
  CHECK(blocks_of(reqs) == std::vector<address_t>{3, 4, 5, 6});
}

TEST_CASE("without reload, expired copies look cached and expiration misses do not trigger", "[prefetch]")
{
  Cache cache({}, devices::stt_25us(), CacheTiming{0});
  for (address_t b : {3, 4, 5})
    cache.access(rd(b * 64, 0, 0x600), 0);
  cache.advance(1);
  StridePrefetcher pf({4, 4, false}, 64);
  const auto reqs = drive(cache, pf, {rd(0, 100'000), rd(64, 100'200), rd(128, 100'400)});
  CHECK(blocks_of(reqs) == std::vector<address_t>{6});

  // Block 2 expired before its second visit: the established stream stays quiet.
  Cache c2({}, devices::stt_25us(), CacheTiming{0});
  StridePrefetcher p2({4, 4, false}, 64);
  c2.access(rd(128, 0, 0x600), 0);
  c2.advance(1);
  const auto quiet = drive(c2, p2, {rd(0, 100'000), rd(64, 100'200), rd(128, 100'400)});
  CHECK(quiet.empty());

  Cache c3({}, devices::stt_25us(), CacheTiming{0});
  StridePrefetcher p3({4, 4, true}, 64);
  c3.access(rd(128, 0, 0x600), 0);
  c3.advance(1);
  CHECK_FALSE(drive(c3, p3, {rd(0, 100'000), rd(64, 100'200), rd(128, 100'400)}).empty());
}

TEST_CASE("degree limits requests per trigger and the frontier continues", "[prefetch]")
{
  Cache cache({}, devices::stt_1ms());
  StridePrefetcher pf({2, 8}, 64);
  CHECK(blocks_of(drive(cache, pf, {rd(0, 0), rd(64, 10), rd(128, 20)})) == std::vector<address_t>{3, 4});
  // Block 3 is still in flight, so this access is a merged miss and triggers again.
  CHECK(blocks_of(drive(cache, pf, {rd(192, 30)})) == std::vector<address_t>{5, 6});
}

TEST_CASE("negative and sub-block strides", "[prefetch]")
{
  Cache cache({}, devices::stt_1ms());
  StridePrefetcher pf({4, 4}, 64);
  CHECK(blocks_of(drive(cache, pf, {rd(64 * 100, 0), rd(64 * 99, 10), rd(64 * 98, 20)})) == std::vector<address_t>{97, 96, 95, 94});

  Cache c2({}, devices::stt_1ms());
  StridePrefetcher p2({2, 4}, 64);
  // An 8-byte stride still walks forward one block at a time.
  CHECK(blocks_of(drive(c2, p2, {rd(0, 0), rd(8, 10), rd(16, 20)})) == std::vector<address_t>{1, 2});
  CHECK(blocks_of(drive(c2, p2, {rd(64 * 10, 300), rd(64 * 10 + 8, 310), rd(64 * 10 + 16, 320)})) == std::vector<address_t>{13, 14});
}

TEST_CASE("requests stay within the distance and never duplicate live or outstanding blocks", "[prefetch][property]")
{
  std::mt19937_64 rng(99);
  for (int t = 0; t < 20; ++t) {
    const unsigned distance = kPrefetchDistances[t % 5];
    const unsigned degree = 1 + static_cast<unsigned>(rng() % 6);
    Cache cache({4096, 64, 4}, devices::stt_25us(), CacheTiming{100, 16});
    StridePrefetcher pf({degree, distance}, 64);
    cycle_t now = 0;
    const std::int64_t strides[] = {64, -64, 128, 192, 32};
    std::int64_t addr[4] = {1 << 20, 2 << 20, 3 << 20, 4 << 20};
    for (int i = 0; i < 3000; ++i) {
      now += rng() % 3000;
      const int s = static_cast<int>(rng() % 4);
      addr[s] += strides[(s + (rng() % 17 == 0 ? 1 : 0)) % 5];
      const TraceEvent e = rd(static_cast<address_t>(addr[s]), now, 0x500 + s);
      const auto r = cache.access(e, now);
      const auto reqs = pf.observe(e, r, cache, now);
      CHECK(reqs.size() <= degree);
      const auto demand_block = static_cast<std::int64_t>(e.address / 64);
      const auto stride = pf.entry_for(e.pc).stride;
      const std::int64_t block_stride = stride / 64 != 0 ? stride / 64 : (stride > 0 ? 1 : -1);
      for (const auto& q : reqs) {
        const auto steps = (static_cast<std::int64_t>(q.block_address / 64) - demand_block) / block_stride;
        CHECK(steps >= 1);
        CHECK(steps <= static_cast<std::int64_t>(distance));
        CHECK_FALSE(cache.is_live(q.block_address, now));
        CHECK_FALSE(cache.is_outstanding(q.block_address));
        cache.issue_prefetch(q.block_address, now);
      }
    }
  }
}

TEST_CASE("steady state on a pure stride has no demand misses", "[prefetch][property]")
{
  for (unsigned distance : {4U, 8U, 16U, 32U}) {
    Simulator sim({}, devices::stt_1ms(), PrefetchMode::fixed(4, distance));
    const auto trace = gen_strided(kPc, 1 << 20, 64, 4000, 0, 50, AccessKind::Read);
    sim.run(trace.events().first(100));
    const auto misses_after_training = sim.counters().demand_misses;
    sim.run(trace.events().subspan(100));
    CHECK(sim.counters().demand_misses == misses_after_training);
  }
}

TEST_CASE("reloading expired blocks reduces expiration misses on a revisiting stream", "[prefetch][property]")
{
  StridedStream s{.pc = kPc, .base = 0x10000, .stride = 64, .count = 200, .inter_arrival = 20, .passes = 10, .pass_gap = 80'000};
  const std::vector<StreamDescriptor> spec{s};
  const auto trace = gen_mixed(spec, 1);
  Simulator with({}, devices::stt_25us(), PrefetchMode::fixed(4, 16, true));
  Simulator without({}, devices::stt_25us(), PrefetchMode::fixed(4, 16, false));
  with.run(trace.events());
  without.run(trace.events());
  CHECK(with.counters().expiration_misses < without.counters().expiration_misses);
  CHECK(with.counters().prefetchable_expired_reloads > 0);
  CHECK(without.counters().prefetchable_expired_reloads == 0);
}

TEST_CASE("timeliness classification", "[prefetch]")
{
  // Issued at 0 with memory latency 100, so ready at 100; expires 50,000 later.
  CHECK(classify_prefetch_timeliness(100, 50'100, 10) == PrefetchTimeliness::Late);
  CHECK(classify_prefetch_timeliness(100, 50'100, 100) == PrefetchTimeliness::Timely);
  CHECK(classify_prefetch_timeliness(100, 50'100, 50'099) == PrefetchTimeliness::Timely);
  CHECK(classify_prefetch_timeliness(100, 50'100, 50'100) == PrefetchTimeliness::Unused);
  CHECK(classify_prefetch_timeliness(100, 50'100, std::nullopt) == PrefetchTimeliness::Unused);
}

TEST_CASE("every prefetch fill ends in exactly one timeliness class", "[prefetch][property]")
{
  StridedStream s{.pc = kPc, .base = 0, .stride = 64, .count = 300, .inter_arrival = 30, .passes = 6, .pass_gap = 70'000};
  RandomStream noise{.pc = 0x777, .lo = 0x100000, .hi = 0x140000, .count = 1500, .inter_arrival = 40};
  const std::vector<StreamDescriptor> spec{s, noise};
  Simulator sim({}, devices::stt_25us(), PrefetchMode::fixed(4, 32));
  sim.run(gen_mixed(spec, 9).events());
  sim.finish();
  const auto& k = sim.counters();
  CHECK(k.late_prefetches + k.timely_prefetches + k.expired_unused_prefetches + k.unused_evicted_prefetches + sim.cache().resident_unused_prefetches() ==
        k.total_prefetches);
}

TEST_CASE("NST window update", "[prefetch][nst]")
{
  NstState st;
  CHECK(st.current_distance == 1);
  CHECK(nst_update(st, {40, 100}) == 4);

  NstState top{32, {}};
  CHECK(nst_update(top, {90, 100}) == 32);

  NstState idle{8, {}};
  CHECK(nst_update(idle, {0, 0}) == 8);

  NstState mid{8, {}};
  CHECK(nst_update(mid, {10, 100}) == 8); // between the marks
  CHECK(nst_update(mid, {4, 100}) == 4);  // below the low-water mark
  NstState bottom;
  CHECK(nst_update(bottom, {0, 100}) == 1);
}

TEST_CASE("NST starts at distance 1 in the simulator", "[prefetch][nst]")
{
  Simulator sim({}, devices::sram(), PrefetchMode::throttled(4));
  CHECK(sim.current_distance() == 1);
  CHECK(sim.nst_state().current_distance == 1);
}
