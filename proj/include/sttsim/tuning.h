#ifndef STTSIM_TUNING_H
#define STTSIM_TUNING_H

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sttsim/energy.h"
#include "sttsim/simulator.h"
#include "sttsim/trace.h"

namespace sttsim
{
/// Retention units visited by tuning, longest retention first.
struct RetentionSet {
  std::vector<RetentionConfig> units;

  /// {1ms, 100us, 75us, 50us, 25us}
  static RetentionSet standard();
  void validate() const;
  const RetentionConfig& longest() const { return units.front(); }
  const RetentionConfig* find(const std::string& label) const;
};

struct PartThresholds {
  double min_all_pf = 0.001;               // below this, prefetching is not a real share of memory traffic
  double min_expired_pf_for_base = 0.0002; // base expiredPF must exceed this
  double growth_factor = 2.0;              // reject a retention once expiredPF reaches factor * base
  std::size_t sampling_window = 100'000;   // demand events per sampled retention
  double miss_tolerance = 0.05;            // miss-based fallback: allowed miss-rate growth over the longest unit

  void validate() const;
};

enum class TuningMode { ExpiredPF, MissBased };

struct WindowSample {
  std::string retention;
  double all_pf = 0.0;
  double expired_pf = 0.0;
  double miss_rate = 0.0;
  std::string output_after; // selected retention after this sample was evaluated
  CounterSet counters;
};

struct TuningDecision {
  std::string retention;
  unsigned distance = 1;
  TuningMode mode = TuningMode::ExpiredPF;
  std::vector<WindowSample> samples;      // prefetch-aware samples, in visiting order
  std::vector<WindowSample> miss_samples; // fallback samples, prefetcher off
};

class InsufficientSamples : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Maps expiredPF sampled at degree 1 to a prefetch distance.
/// >5% -> 1, (1%,5%] -> 4, (0.5%,1%] -> 8, [0.05%,0.5%] -> 16, <0.05% -> 32.
unsigned rpc_distance(double expired_pf);

using WindowSampler = std::function<WindowSample(const RetentionConfig&)>;
using MissFallback = std::function<std::string(const std::string& output_so_far)>;

/// Prefetch-aware retention tuning over a sampler. The control flow depends only
/// on the sequence of (allPF, expiredPF) values the sampler returns; the
/// fallback is invoked when prefetches are too rare to judge by.
TuningDecision part_decide(const RetentionSet& set, const PartThresholds& th, const WindowSampler& sample, const MissFallback& fallback);

/// Shortest unit whose miss rate stays within (1 + tolerance) of the first (longest) unit's.
std::string miss_based_choice(std::span<const RetentionConfig> units, std::span<const double> miss_rates, double tolerance);

/// Runs consecutive windows of a trace on a live simulator.
class SamplingSession
{
public:
  SamplingSession(Simulator& sim, std::span<const TraceEvent> events, std::size_t window);

  /// Switches to `unit` if needed, runs one window under `mode` and returns its statistics.
  WindowSample sample(const RetentionConfig& unit, const PrefetchMode& mode);

  std::size_t cursor() const { return cursor_; }
  std::span<const TraceEvent> remaining() const { return events_.subspan(cursor_); }
  Simulator& simulator() { return sim_; }

private:
  Simulator& sim_;
  std::span<const TraceEvent> events_;
  std::size_t window_;
  std::size_t cursor_ = 0;
};

/// Samples with a degree-1, distance-1 prefetcher.
PrefetchMode part_sampling_mode(bool trigger_on_expiration_miss = true);

TuningDecision part_tune(SamplingSession& session, const RetentionSet& set, const PartThresholds& th, bool trigger_on_expiration_miss = true);
std::string miss_based_tune(SamplingSession& session, const RetentionSet& set, const PartThresholds& th, const PrefetchMode& mode = PrefetchMode::off(),
                            std::vector<WindowSample>* samples = nullptr);

/// Convenience forms on a fresh simulator that starts in the longest unit.
TuningDecision part_tune(const TraceSource& workload, const RetentionSet& set, const PartThresholds& th, const SimConfig& sim = {});
std::string miss_based_tune(const TraceSource& workload, const RetentionSet& set, const PartThresholds& th, const SimConfig& sim = {});

/// One line per sample: `retention allPF expiredPF miss_rate decision-so-far`.
void write_tuning_log(std::ostream& out, const TuningDecision& decision);

std::string to_string(TuningMode mode);
} // namespace sttsim

#endif
