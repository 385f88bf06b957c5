#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sttsim/trace.h"

using namespace sttsim;

namespace
{
std::filesystem::path scratch(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / "sttsim_test_trace";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TraceSource parse(const std::string& text)
{
  std::istringstream in(text);
  return read_text_trace(in);
}
} // namespace

TEST_CASE("single text record loads as written", "[trace]")
{
  const auto t = parse("100 0x400 0x1000 R\n");
  REQUIRE(t.size() == 1);
  CHECK(t[0] == TraceEvent{100, 0x400, 0x1000, AccessKind::Read});
}

TEST_CASE("empty input yields an empty trace", "[trace]")
{
  CHECK(parse("").size() == 0);
  CHECK(parse("# only a comment\n\n").size() == 0);

  const auto path = scratch("empty.txt");
  std::ofstream(path).close();
  CHECK(load_trace(path, TraceFormat::Text).empty());
}

TEST_CASE("cycle regression is reported at the offending record", "[trace]")
{
  try {
    parse("10 0x1 0x40 R\n5 0x1 0x80 R\n");
    FAIL("expected a TraceError");
  } catch (const TraceError& e) {
    CHECK(e.record() == 2);
  }
  CHECK_THROWS_AS(TraceSource(std::vector<TraceEvent>{{10, 0, 0, AccessKind::Read}, {5, 0, 0, AccessKind::Read}}), TraceError);
}

TEST_CASE("malformed lines name their line number", "[trace]")
{
  const std::string bad[] = {"1 0x1 0x2\n", "x 0x1 0x2 R\n", "1 zz 0x2 R\n", "1 0x1 0x2 Q\n", "1 0x1 0x2 R extra\n"};
  for (const auto& b : bad) {
    try {
      parse("# header\n0 0x1 0x0 W\n" + b);
      FAIL("expected a TraceError for " << b);
    } catch (const TraceError& e) {
      CHECK(e.record() == 3);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}

TEST_CASE("file errors carry the path", "[trace]")
{
  const auto path = scratch("bad.txt");
  std::ofstream(path) << "0 0x1 0x2 R\n9 0x1\n";
  try {
    load_trace(path, TraceFormat::Text);
    FAIL("expected a TraceError");
  } catch (const TraceError& e) {
    CHECK(std::string(e.what()).find("bad.txt") != std::string::npos);
    CHECK(e.record() == 2);
  }
  CHECK_THROWS_AS(load_trace(scratch("does-not-exist.txt"), TraceFormat::Text), TraceError);
}

TEST_CASE("text and binary round trips preserve every record", "[trace][property]")
{
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 20; ++iter) {
    std::vector<TraceEvent> ev;
    cycle_t c = 0;
    const auto n = rng() % 200;
    for (std::uint64_t i = 0; i < n; ++i) {
      c += rng() % 50;
      ev.push_back({c, rng(), rng(), (rng() & 1) ? AccessKind::Write : AccessKind::Read});
    }
    const TraceSource t(ev);

    std::ostringstream text;
    write_text_trace(text, t);
    std::istringstream text_in(text.str());
    const auto back = read_text_trace(text_in);
    REQUIRE(std::equal(back.begin(), back.end(), t.begin(), t.end()));

    std::ostringstream again;
    write_text_trace(again, back);
    CHECK(again.str() == text.str());

    std::stringstream bin;
    write_binary_trace(bin, t);
    CHECK(bin.str().size() == 25 * t.size());
    const auto bback = read_binary_trace(bin);
    REQUIRE(std::equal(bback.begin(), bback.end(), t.begin(), t.end()));
  }
}

TEST_CASE("binary records are little-endian with a one-byte kind", "[trace]")
{
  const TraceSource t(std::vector<TraceEvent>{{0x0102, 0x0a0b, 0x1000, AccessKind::Write}});
  std::ostringstream out;
  write_binary_trace(out, t);
  const auto s = out.str();
  REQUIRE(s.size() == 25);
  CHECK(static_cast<unsigned char>(s[0]) == 0x02);
  CHECK(static_cast<unsigned char>(s[1]) == 0x01);
  CHECK(static_cast<unsigned char>(s[8]) == 0x0b);
  CHECK(static_cast<unsigned char>(s[17]) == 0x10);
  CHECK(static_cast<unsigned char>(s[24]) == 1);

  std::istringstream truncated(s.substr(0, 20));
  CHECK_THROWS_AS(read_binary_trace(truncated), TraceError);
}

TEST_CASE("strided generator", "[trace]")
{
  const auto t = gen_strided(0x504, 0, 64, 3, 0, 100, AccessKind::Read);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == TraceEvent{0, 0x504, 0, AccessKind::Read});
  CHECK(t[1] == TraceEvent{100, 0x504, 64, AccessKind::Read});
  CHECK(t[2] == TraceEvent{200, 0x504, 128, AccessKind::Read});

  const auto neg = gen_strided(0x504, 128, -64, 2, 0, 1, AccessKind::Read);
  CHECK(neg[0].address == 128);
  CHECK(neg[1].address == 64);

  const auto one = gen_strided(0x1, 4096, 64, 1, 7, 10, AccessKind::Write);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == TraceEvent{7, 0x1, 4096, AccessKind::Write});

  CHECK_THROWS_AS(gen_strided(0x1, 0, 0, 4, 0, 1, AccessKind::Read), std::invalid_argument);
  CHECK_THROWS_AS(gen_strided(0x1, 0, 64, 0, 0, 1, AccessKind::Read), std::invalid_argument);
}

TEST_CASE("two disjoint strided streams interleave", "[trace]")
{
  StridedStream a{.pc = 1, .base = 0, .stride = 64, .count = 4, .start_cycle = 0, .inter_arrival = 10};
  StridedStream b{.pc = 2, .base = 0x10000, .stride = 64, .count = 4, .start_cycle = 0, .inter_arrival = 10};
  const std::vector<StreamDescriptor> spec{a, b};
  const auto t = gen_mixed(spec, 1);
  REQUIRE(t.size() == 8);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t[i].pc == (i % 2 == 0 ? 1U : 2U));
    CHECK(t[i].cycle == 10 * (i / 2));
  }
}

TEST_CASE("multi-pass streams pause between passes", "[trace]")
{
  StridedStream s{.pc = 1, .base = 0, .stride = 64, .count = 2, .start_cycle = 5, .inter_arrival = 10, .passes = 3, .pass_gap = 1000};
  const std::vector<StreamDescriptor> spec{s};
  const auto t = gen_mixed(spec, 0);
  REQUIRE(t.size() == 6);
  CHECK(t[1].cycle == 15);
  CHECK(t[2].cycle == 15 + 1000);
  CHECK(t[2].address == 0);
  CHECK(t[5].address == 64);
}

TEST_CASE("random streams stay in range and are seed-deterministic", "[trace][property]")
{
  RandomStream r{.pc = 3, .lo = 0, .hi = 4096, .count = 100, .inter_arrival = 1, .write_permille = 300};
  const std::vector<StreamDescriptor> spec{r};
  const auto t = gen_mixed(spec, 42);
  REQUIRE(t.size() == 100);
  for (const auto& e : t) {
    CHECK(e.address < 4096);
    CHECK(e.address % 8 == 0);
  }

  std::ostringstream x, y, z;
  write_text_trace(x, gen_mixed(spec, 42));
  write_text_trace(y, gen_mixed(spec, 42));
  write_text_trace(z, gen_mixed(spec, 43));
  CHECK(x.str() == y.str());
  CHECK(x.str() != z.str());
}

TEST_CASE("mixed output is globally cycle-sorted", "[trace][property]")
{
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<StreamDescriptor> spec;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      if (rng() & 1)
        spec.push_back(StridedStream{.pc = rng() % 64, .base = rng() % 100000, .stride = 64, .count = 1 + rng() % 50,
                                     .start_cycle = rng() % 100, .inter_arrival = 1 + rng() % 7, .passes = 1 + rng() % 3, .pass_gap = rng() % 500});
      else
        spec.push_back(RandomStream{.pc = rng() % 64, .lo = 0, .hi = 1 << 16, .count = 1 + rng() % 50, .start_cycle = rng() % 100, .inter_arrival = 1 + rng() % 7});
    }
    const auto t = gen_mixed(spec, iter);
    CHECK(std::is_sorted(t.begin(), t.end(), [](const TraceEvent& a, const TraceEvent& b) { return a.cycle < b.cycle; }));
  }
}

TEST_CASE("equal cycles break ties by stream index, then address", "[trace]")
{
  StridedStream hi{.pc = 9, .base = 0x9000, .stride = 64, .count = 1};
  StridedStream lo{.pc = 8, .base = 0x1000, .stride = 64, .count = 1};
  const std::vector<StreamDescriptor> spec{hi, lo};
  const auto t = gen_mixed(spec, 0);
  CHECK(t[0].pc == 9);
  CHECK(t[1].pc == 8);
}

TEST_CASE("empty or invalid stream specs are rejected", "[trace]")
{
  CHECK_THROWS_AS(gen_mixed({}, 0), std::invalid_argument);
  const std::vector<StreamDescriptor> zero_stride{StridedStream{.stride = 0}};
  CHECK_THROWS_AS(gen_mixed(zero_stride, 0), std::invalid_argument);
  const std::vector<StreamDescriptor> empty_range{RandomStream{.lo = 10, .hi = 10}};
  CHECK_THROWS_AS(gen_mixed(empty_range, 0), std::invalid_argument);
}
