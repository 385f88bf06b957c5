#ifndef STTSIM_TRACE_H
#define STTSIM_TRACE_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sttsim/types.h"

namespace sttsim
{
struct TraceEvent {
  cycle_t cycle = 0;
  std::uint64_t pc = 0;
  address_t address = 0;
  AccessKind kind = AccessKind::Read;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Parse or validation failure; `record()` is the 1-based line (text) or record (binary) number.
class TraceError : public std::runtime_error
{
public:
  TraceError(const std::string& what, std::size_t record) : std::runtime_error(what), record_(record) {}
  std::size_t record() const { return record_; }

private:
  std::size_t record_;
};

/// An immutable, cycle-ordered sequence of events. Copies share storage.
class TraceSource
{
public:
  TraceSource() : events_(std::make_shared<const std::vector<TraceEvent>>()) {}
  explicit TraceSource(std::vector<TraceEvent> events); // throws TraceError on cycle regression

  std::size_t size() const { return events_->size(); }
  bool empty() const { return events_->empty(); }
  std::span<const TraceEvent> events() const { return *events_; }
  auto begin() const { return events_->cbegin(); }
  auto end() const { return events_->cend(); }
  const TraceEvent& operator[](std::size_t i) const { return (*events_)[i]; }

private:
  std::shared_ptr<const std::vector<TraceEvent>> events_;
};

enum class TraceFormat { Text, Binary };

TraceSource load_trace(const std::filesystem::path& path, TraceFormat format);
TraceSource read_text_trace(std::istream& in);
TraceSource read_binary_trace(std::istream& in);

void write_trace(const std::filesystem::path& path, const TraceSource& trace, TraceFormat format);
void write_text_trace(std::ostream& out, const TraceSource& trace);
void write_binary_trace(std::ostream& out, const TraceSource& trace);

/// `count` events at base, base+stride, ... spaced `inter_arrival` cycles apart.
TraceSource gen_strided(std::uint64_t pc, address_t base, std::int64_t stride, std::size_t count, cycle_t start_cycle, cycle_t inter_arrival,
                        AccessKind kind);

/// A strided stream that may sweep its footprint several times, pausing
/// `pass_gap` cycles between the last access of one pass and the first of the next.
struct StridedStream {
  std::uint64_t pc = 0;
  address_t base = 0;
  std::int64_t stride = 64;
  std::size_t count = 1; // accesses per pass
  cycle_t start_cycle = 0;
  cycle_t inter_arrival = 1;
  AccessKind kind = AccessKind::Read;
  std::size_t passes = 1;
  cycle_t pass_gap = 0;
};

/// Uniformly random addresses in [lo, hi), aligned down to `align` bytes.
struct RandomStream {
  std::uint64_t pc = 0;
  address_t lo = 0;
  address_t hi = 4096;
  std::size_t count = 1;
  cycle_t start_cycle = 0;
  cycle_t inter_arrival = 1;
  unsigned write_permille = 0;
  std::uint64_t align = 8;
};

using StreamDescriptor = std::variant<StridedStream, RandomStream>;

/// Merges the streams into one cycle-ordered trace. Ties break by stream index, then address.
/// Deterministic for a given seed. Throws std::invalid_argument on an empty or invalid spec.
TraceSource gen_mixed(std::span<const StreamDescriptor> streams, std::uint64_t seed);
} // namespace sttsim

#endif
