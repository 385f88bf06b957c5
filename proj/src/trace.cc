#include "sttsim/trace.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>
#include <tuple>

namespace sttsim
{
namespace
{
void check_order(const std::vector<TraceEvent>& events)
{
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].cycle < events[i - 1].cycle)
      throw TraceError("cycle regression: " + std::to_string(events[i].cycle) + " after " + std::to_string(events[i - 1].cycle), i + 1);
  }
}

bool parse_u64(std::string_view tok, int base, std::uint64_t& out)
{
  if (base == 16 && (tok.starts_with("0x") || tok.starts_with("0X")))
    tok.remove_prefix(2);
  if (tok.empty())
    return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out, base);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
      ++i;
    if (i > start)
      out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
void put_le(std::ostream& out, T v)
{
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

std::uint64_t get_le64(const unsigned char* p)
{
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | p[i];
  return v;
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Tagged {
  TraceEvent event;
  std::size_t stream;
};

void expand(const StridedStream& s, std::size_t idx, std::vector<Tagged>& out)
{
  if (s.stride == 0 || s.count == 0 || s.passes == 0)
    throw std::invalid_argument("strided stream " + std::to_string(idx) + ": stride must be non-zero and count/passes positive");
  cycle_t cycle = s.start_cycle;
  for (std::size_t p = 0; p < s.passes; ++p) {
    if (p > 0)
      cycle += s.pass_gap;
    for (std::size_t k = 0; k < s.count; ++k) {
      const auto addr = s.base + static_cast<address_t>(static_cast<std::int64_t>(k) * s.stride);
      out.push_back({{cycle, s.pc, addr, s.kind}, idx});
      if (k + 1 < s.count)
        cycle += s.inter_arrival;
    }
  }
}

void expand(const RandomStream& s, std::size_t idx, std::uint64_t seed, std::vector<Tagged>& out)
{
  if (s.hi <= s.lo || s.count == 0 || s.align == 0 || s.write_permille > 1000)
    throw std::invalid_argument("random stream " + std::to_string(idx) + ": needs lo < hi, count > 0, align > 0, write_permille <= 1000");
  std::mt19937_64 rng{splitmix64(seed ^ splitmix64(idx))};
  const auto span = s.hi - s.lo;
  for (std::size_t k = 0; k < s.count; ++k) {
    auto addr = s.lo + rng() % span;
    addr -= (addr - s.lo) % s.align;
    const bool write = (rng() % 1000) < s.write_permille;
    out.push_back({{s.start_cycle + k * s.inter_arrival, s.pc, addr, write ? AccessKind::Write : AccessKind::Read}, idx});
  }
}
} // namespace

TraceSource::TraceSource(std::vector<TraceEvent> events)
{
  check_order(events);
  events_ = std::make_shared<const std::vector<TraceEvent>>(std::move(events));
}

TraceSource read_text_trace(std::istream& in)
{
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty() || toks.front().starts_with('#'))
      continue;
    if (toks.size() != 4)
      throw TraceError("line " + std::to_string(lineno) + ": expected '<cycle> <pc-hex> <address-hex> <R|W>'", lineno);
    TraceEvent ev;
    if (!parse_u64(toks[0], 10, ev.cycle))
      throw TraceError("line " + std::to_string(lineno) + ": bad cycle '" + std::string(toks[0]) + "'", lineno);
    if (!parse_u64(toks[1], 16, ev.pc))
      throw TraceError("line " + std::to_string(lineno) + ": bad pc '" + std::string(toks[1]) + "'", lineno);
    if (!parse_u64(toks[2], 16, ev.address))
      throw TraceError("line " + std::to_string(lineno) + ": bad address '" + std::string(toks[2]) + "'", lineno);
    if (toks[3] == "R" || toks[3] == "r")
      ev.kind = AccessKind::Read;
    else if (toks[3] == "W" || toks[3] == "w")
      ev.kind = AccessKind::Write;
    else
      throw TraceError("line " + std::to_string(lineno) + ": bad access kind '" + std::string(toks[3]) + "'", lineno);
    if (!events.empty() && ev.cycle < events.back().cycle)
      throw TraceError("line " + std::to_string(lineno) + ": cycle regression (" + std::to_string(ev.cycle) + " after " + std::to_string(events.back().cycle) + ")",
                       lineno);
    events.push_back(ev);
  }
  return TraceSource{std::move(events)};
}

TraceSource read_binary_trace(std::istream& in)
{
  constexpr std::size_t kRecord = 25;
  std::vector<TraceEvent> events;
  std::array<unsigned char, kRecord> buf{};
  std::size_t record = 0;
  while (true) {
    in.read(reinterpret_cast<char*>(buf.data()), kRecord);
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0)
      break;
    ++record;
    if (got != kRecord)
      throw TraceError("record " + std::to_string(record) + ": truncated (" + std::to_string(got) + " of 25 bytes)", record);
    TraceEvent ev{get_le64(buf.data()), get_le64(buf.data() + 8), get_le64(buf.data() + 16), AccessKind::Read};
    if (buf[24] > 1)
      throw TraceError("record " + std::to_string(record) + ": bad access kind byte " + std::to_string(buf[24]), record);
    ev.kind = static_cast<AccessKind>(buf[24]);
    if (!events.empty() && ev.cycle < events.back().cycle)
      throw TraceError("record " + std::to_string(record) + ": cycle regression", record);
    events.push_back(ev);
  }
  return TraceSource{std::move(events)};
}

TraceSource load_trace(const std::filesystem::path& path, TraceFormat format)
{
  std::ifstream in(path, format == TraceFormat::Binary ? std::ios::binary : std::ios::in);
  if (!in)
    throw TraceError("cannot open trace file " + path.string(), 0);
  try {
    return format == TraceFormat::Binary ? read_binary_trace(in) : read_text_trace(in);
  } catch (const TraceError& e) {
    throw TraceError(path.string() + ": " + e.what(), e.record());
  }
}

void write_text_trace(std::ostream& out, const TraceSource& trace)
{
  std::ostringstream buf;
  buf << std::hex;
  for (const auto& ev : trace) {
    buf << std::dec << ev.cycle << std::hex << " 0x" << ev.pc << " 0x" << ev.address << (ev.kind == AccessKind::Write ? " W\n" : " R\n");
  }
  out << buf.str();
}

void write_binary_trace(std::ostream& out, const TraceSource& trace)
{
  for (const auto& ev : trace) {
    put_le(out, ev.cycle);
    put_le(out, ev.pc);
    put_le(out, ev.address);
    put_le(out, static_cast<std::uint8_t>(ev.kind));
  }
}

void write_trace(const std::filesystem::path& path, const TraceSource& trace, TraceFormat format)
{
  std::ofstream out(path, format == TraceFormat::Binary ? std::ios::binary : std::ios::out);
  if (!out)
    throw std::runtime_error("cannot write trace file " + path.string());
  if (format == TraceFormat::Binary)
    write_binary_trace(out, trace);
  else
    write_text_trace(out, trace);
}

TraceSource gen_strided(std::uint64_t pc, address_t base, std::int64_t stride, std::size_t count, cycle_t start_cycle, cycle_t inter_arrival,
                        AccessKind kind)
{
  if (stride == 0 || count == 0)
    throw std::invalid_argument("gen_strided: stride must be non-zero and count positive");
  std::vector<TraceEvent> events;
  events.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    events.push_back({start_cycle + k * inter_arrival, pc, base + static_cast<address_t>(static_cast<std::int64_t>(k) * stride), kind});
  return TraceSource{std::move(events)};
}

TraceSource gen_mixed(std::span<const StreamDescriptor> streams, std::uint64_t seed)
{
  if (streams.empty())
    throw std::invalid_argument("gen_mixed: at least one stream descriptor is required");
  std::vector<Tagged> all;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    std::visit(
        [&](const auto& s) {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RandomStream>)
            expand(s, i, seed, all);
          else
            expand(s, i, all);
        },
        streams[i]);
  }
  std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    return std::tie(a.event.cycle, a.stream, a.event.address) < std::tie(b.event.cycle, b.stream, b.event.address);
  });
  std::vector<TraceEvent> events;
  events.reserve(all.size());
  for (const auto& t : all)
    events.push_back(t.event);
  return TraceSource{std::move(events)};
}
} // namespace sttsim
