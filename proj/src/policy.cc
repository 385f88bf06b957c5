#include "sttsim/policy.h"

#include <charconv>
#include <stdexcept>

namespace sttsim
{
namespace
{
unsigned parse_distance(std::string_view s, std::string_view whole)
{
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !is_valid_distance(v))
    throw std::invalid_argument("unknown policy '" + std::string(whole) + "': distance must be one of 1, 4, 8, 16, 32");
  return v;
}

PolicyResult finish_run(Simulator& sim, const Policy& policy)
{
  sim.finish();
  PolicyResult r;
  r.policy = policy.name();
  r.retention = sim.cache().retention().label;
  const auto& mode = sim.prefetch_mode();
  if (!mode.enabled)
    r.distance = "off";
  else if (mode.control == DistanceControl::Nst)
    r.distance = "NST";
  else
    r.distance = std::to_string(mode.distance);
  r.counters = sim.counters();
  r.ledger = sim.ledger();
  r.report = sim.report();
  return r;
}

const RetentionConfig& unit_or_throw(const RetentionSet& set, const std::string& label)
{
  if (const auto* u = set.find(label))
    return *u;
  throw std::logic_error("tuning chose a unit outside the retention set: " + label);
}
} // namespace

Policy Policy::parse(std::string_view name)
{
  if (name == "LARS")
    return {PolicyKind::Lars, 0, {}};
  if (name == "LARS+NST")
    return {PolicyKind::LarsNst, 0, {}};
  if (name == "PART+RPC")
    return {PolicyKind::PartRpc, 0, {}};
  if (name == "PART+NST")
    return {PolicyKind::PartNst, 0, {}};
  if (name == "SRAM+NST")
    return {PolicyKind::SramNst, 0, {}};
  if (name.starts_with("LARS+PFD_"))
    return {PolicyKind::LarsPfd, parse_distance(name.substr(9), name), {}};
  if (name.starts_with("PART+PFD_"))
    return {PolicyKind::PartPfd, parse_distance(name.substr(9), name), {}};
  if (name.starts_with("STATIC:")) {
    const auto rest = name.substr(7);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("unknown policy '" + std::string(name) + "': expected STATIC:<retention>:<distance|off>");
    const auto unit = devices::find(rest.substr(0, colon));
    if (!unit)
      throw std::invalid_argument("unknown policy '" + std::string(name) + "': unknown retention");
    const auto dist = rest.substr(colon + 1);
    return {PolicyKind::Static, dist == "off" ? 0U : parse_distance(dist, name), unit->label};
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::string Policy::name() const
{
  switch (kind) {
  case PolicyKind::Lars:
    return "LARS";
  case PolicyKind::LarsPfd:
    return "LARS+PFD_" + std::to_string(distance);
  case PolicyKind::LarsNst:
    return "LARS+NST";
  case PolicyKind::PartRpc:
    return "PART+RPC";
  case PolicyKind::PartPfd:
    return "PART+PFD_" + std::to_string(distance);
  case PolicyKind::PartNst:
    return "PART+NST";
  case PolicyKind::SramNst:
    return "SRAM+NST";
  case PolicyKind::Static:
    return "STATIC:" + retention + ":" + (distance == 0 ? std::string("off") : std::to_string(distance));
  }
  return "?";
}

PolicyResult run_static(const TraceSource& workload, const RetentionConfig& unit, std::optional<unsigned> distance, const ExperimentConfig& config)
{
  const auto mode = distance ? PrefetchMode::fixed(config.degree, *distance, config.trigger_on_expiration_miss) : PrefetchMode::off();
  Simulator sim(config.sim, unit, mode);
  sim.run(workload.events());
  return finish_run(sim, Policy{PolicyKind::Static, distance.value_or(0), unit.label});
}

PolicyResult run_policy(const TraceSource& workload, const Policy& policy, const ExperimentConfig& config)
{
  config.retentions.validate();
  config.thresholds.validate();
  const bool trigger = config.trigger_on_expiration_miss;

  switch (policy.kind) {
  case PolicyKind::Static: {
    const auto unit = devices::find(policy.retention);
    if (!unit)
      throw std::invalid_argument("unknown retention '" + policy.retention + "'");
    return run_static(workload, *unit, policy.distance == 0 ? std::nullopt : std::optional<unsigned>(policy.distance), config);
  }
  case PolicyKind::SramNst: {
    Simulator sim(config.sim, devices::sram(), PrefetchMode::throttled(config.degree, config.nst, trigger));
    sim.run(workload.events());
    return finish_run(sim, policy);
  }
  case PolicyKind::Lars:
  case PolicyKind::LarsPfd:
  case PolicyKind::LarsNst: {
    PrefetchMode mode = PrefetchMode::off();
    if (policy.kind == PolicyKind::LarsPfd)
      mode = PrefetchMode::fixed(config.lars_pfd_degree, policy.distance, trigger);
    else if (policy.kind == PolicyKind::LarsNst)
      mode = PrefetchMode::throttled(config.degree, config.nst, trigger);

    Simulator sim(config.sim, config.retentions.longest(), mode);
    SamplingSession session(sim, workload.events(), config.thresholds.sampling_window);
    const auto choice = miss_based_tune(session, config.retentions, config.thresholds, mode);
    sim.switch_retention(unit_or_throw(config.retentions, choice));
    sim.run(session.remaining());
    auto r = finish_run(sim, policy);
    r.lars_choice = choice;
    return r;
  }
  case PolicyKind::PartRpc:
  case PolicyKind::PartPfd:
  case PolicyKind::PartNst: {
    Simulator sim(config.sim, config.retentions.longest(), part_sampling_mode(trigger));
    SamplingSession session(sim, workload.events(), config.thresholds.sampling_window);
    auto decision = part_tune(session, config.retentions, config.thresholds, trigger);
    sim.switch_retention(unit_or_throw(config.retentions, decision.retention));
    if (policy.kind == PolicyKind::PartRpc)
      sim.set_prefetch_mode(PrefetchMode::fixed(config.degree, decision.distance, trigger));
    else if (policy.kind == PolicyKind::PartPfd)
      sim.set_prefetch_mode(PrefetchMode::fixed(config.degree, policy.distance, trigger));
    else
      sim.set_prefetch_mode(PrefetchMode::throttled(config.degree, config.nst, trigger));
    sim.run(session.remaining());
    auto r = finish_run(sim, policy);
    r.decision = std::move(decision);
    return r;
  }
  }
  throw std::logic_error("unhandled policy kind");
}
} // namespace sttsim
