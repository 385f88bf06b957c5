#include "sttsim/tuning.h"

#include <algorithm>
#include <optional>
#include <ostream>

#include <fmt/format.h>

namespace sttsim
{
RetentionSet RetentionSet::standard()
{
  return {{devices::stt_1ms(), devices::stt_100us(), devices::stt_75us(), devices::stt_50us(), devices::stt_25us()}};
}

void RetentionSet::validate() const
{
  if (units.empty())
    throw std::invalid_argument("retention set is empty");
  for (std::size_t i = 0; i < units.size(); ++i) {
    units[i].validate();
    if (units[i].never_expires())
      throw std::invalid_argument("retention set may only hold expiring units");
    if (i > 0 && units[i].retention_ns >= units[i - 1].retention_ns)
      throw std::invalid_argument("retention set must be ordered from longest to shortest retention");
  }
}

const RetentionConfig* RetentionSet::find(const std::string& label) const
{
  auto it = std::find_if(units.begin(), units.end(), [&](const RetentionConfig& r) { return r.label == label; });
  return it == units.end() ? nullptr : &*it;
}

void PartThresholds::validate() const
{
  if (!(min_all_pf > 0) || !(min_expired_pf_for_base > 0) || !(growth_factor > 1.0) || sampling_window == 0 || !(miss_tolerance >= 0))
    throw std::invalid_argument("tuning thresholds must be positive and the growth factor above 1");
}

unsigned rpc_distance(double expired_pf)
{
  if (expired_pf > 0.05)
    return 1;
  if (expired_pf > 0.01)
    return 4;
  if (expired_pf > 0.005)
    return 8;
  if (expired_pf >= 0.0005)
    return 16;
  return 32;
}

TuningDecision part_decide(const RetentionSet& set, const PartThresholds& th, const WindowSampler& sample, const MissFallback& fallback)
{
  set.validate();
  TuningDecision d;
  d.retention = set.longest().label;
  std::optional<double> base_expired_pf;

  auto finalize = [&](TuningMode mode) {
    d.mode = mode;
    // RPC keys on the expiredPF seen at the selected unit, else the last one sampled.
    auto it = std::find_if(d.samples.begin(), d.samples.end(), [&](const WindowSample& s) { return s.retention == d.retention; });
    const double expired_pf = it != d.samples.end() ? it->expired_pf : d.samples.back().expired_pf;
    d.distance = rpc_distance(expired_pf);
    return d;
  };

  for (const auto& unit : set.units) {
    auto s = sample(unit);
    s.retention = unit.label;
    d.samples.push_back(s);
    auto& rec = d.samples.back();

    if (s.all_pf > th.min_all_pf) {
      if (base_expired_pf) {
        if (s.expired_pf < th.growth_factor * *base_expired_pf) {
          d.retention = unit.label;
        } else {
          rec.output_after = d.retention;
          return finalize(TuningMode::ExpiredPF);
        }
      } else {
        d.retention = unit.label;
        if (s.expired_pf > th.min_expired_pf_for_base)
          base_expired_pf = s.expired_pf;
      }
      rec.output_after = d.retention;
    } else {
      d.retention = unit.label;
      d.retention = fallback(d.retention);
      rec.output_after = d.retention;
      return finalize(TuningMode::MissBased);
    }
  }
  return finalize(TuningMode::ExpiredPF);
}

std::string miss_based_choice(std::span<const RetentionConfig> units, std::span<const double> miss_rates, double tolerance)
{
  if (units.empty() || units.size() != miss_rates.size())
    throw std::invalid_argument("miss-based tuning needs one miss rate per retention unit");
  const double limit = (1.0 + tolerance) * miss_rates.front();
  std::string choice = units.front().label;
  std::uint64_t shortest = units.front().retention_ns;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (miss_rates[i] <= limit && units[i].retention_ns <= shortest) {
      shortest = units[i].retention_ns;
      choice = units[i].label;
    }
  }
  return choice;
}

SamplingSession::SamplingSession(Simulator& sim, std::span<const TraceEvent> events, std::size_t window) : sim_(sim), events_(events), window_(window)
{
  if (window_ == 0)
    throw std::invalid_argument("sampling window must be positive");
}

WindowSample SamplingSession::sample(const RetentionConfig& unit, const PrefetchMode& mode)
{
  if (events_.size() - cursor_ < window_)
    throw InsufficientSamples(fmt::format("workload has {} events left, a sampling window needs {}", events_.size() - cursor_, window_));
  sim_.switch_retention(unit);
  sim_.set_prefetch_mode(mode);
  const CounterSet before = sim_.counters();
  sim_.run(events_.subspan(cursor_, window_));
  cursor_ += window_;
  sim_.drain_expired();
  const CounterSet delta = sim_.counters() - before;

  const auto r = ratios(delta);
  WindowSample s;
  s.retention = unit.label;
  s.all_pf = r.all_pf;
  s.expired_pf = r.expired_pf;
  s.miss_rate = delta.miss_rate();
  s.counters = delta;
  return s;
}

PrefetchMode part_sampling_mode(bool trigger_on_expiration_miss) { return PrefetchMode::fixed(1, 1, trigger_on_expiration_miss); }

std::string miss_based_tune(SamplingSession& session, const RetentionSet& set, const PartThresholds& th, const PrefetchMode& mode,
                            std::vector<WindowSample>* samples)
{
  set.validate();
  std::vector<double> rates;
  for (const auto& unit : set.units) {
    auto s = session.sample(unit, mode);
    rates.push_back(s.miss_rate);
    if (samples)
      samples->push_back(s);
  }
  return miss_based_choice(set.units, rates, th.miss_tolerance);
}

TuningDecision part_tune(SamplingSession& session, const RetentionSet& set, const PartThresholds& th, bool trigger_on_expiration_miss)
{
  th.validate();
  std::vector<WindowSample> miss_samples;
  const auto mode = part_sampling_mode(trigger_on_expiration_miss);
  auto decision = part_decide(
      set, th, [&](const RetentionConfig& unit) { return session.sample(unit, mode); },
      [&](const std::string&) { return miss_based_tune(session, set, th, PrefetchMode::off(), &miss_samples); });
  decision.miss_samples = std::move(miss_samples);
  return decision;
}

TuningDecision part_tune(const TraceSource& workload, const RetentionSet& set, const PartThresholds& th, const SimConfig& sim)
{
  set.validate();
  Simulator simulator(sim, set.longest(), part_sampling_mode());
  SamplingSession session(simulator, workload.events(), th.sampling_window);
  return part_tune(session, set, th);
}

std::string miss_based_tune(const TraceSource& workload, const RetentionSet& set, const PartThresholds& th, const SimConfig& sim)
{
  set.validate();
  th.validate();
  Simulator simulator(sim, set.longest());
  SamplingSession session(simulator, workload.events(), th.sampling_window);
  return miss_based_tune(session, set, th);
}

std::string to_string(TuningMode mode) { return mode == TuningMode::ExpiredPF ? "ExpiredPF" : "MissBased"; }

void write_tuning_log(std::ostream& out, const TuningDecision& decision)
{
  out << "# retention allPF expiredPF miss_rate decision-so-far\n";
  for (const auto& s : decision.samples)
    out << fmt::format("{} {:.6f} {:.6f} {:.6f} {}\n", s.retention, s.all_pf, s.expired_pf, s.miss_rate, s.output_after);
  for (const auto& s : decision.miss_samples)
    out << fmt::format("{} {:.6f} {:.6f} {:.6f} miss-based\n", s.retention, s.all_pf, s.expired_pf, s.miss_rate);
  out << fmt::format("# result {} distance {} mode {}\n", decision.retention, decision.distance, to_string(decision.mode));
}
} // namespace sttsim
