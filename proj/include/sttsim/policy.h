#ifndef STTSIM_POLICY_H
#define STTSIM_POLICY_H

#include <optional>
#include <string>
#include <string_view>

#include "sttsim/energy.h"
#include "sttsim/prefetch.h"
#include "sttsim/simulator.h"
#include "sttsim/trace.h"
#include "sttsim/tuning.h"

namespace sttsim
{
enum class PolicyKind {
  Lars,        // miss-based retention, no prefetching
  LarsPfd,     // miss-based retention, uniform distance N
  LarsNst,     // miss-based retention, near-side throttling
  PartRpc,     // prefetch-aware retention, distance from the RPC table
  PartPfd,     // prefetch-aware retention, uniform distance N
  PartNst,     // prefetch-aware retention, near-side throttling
  SramNst,     // SRAM array, near-side throttling
  Static,      // fixed retention and fixed distance (or no prefetching); used by sweeps
};

struct Policy {
  PolicyKind kind = PolicyKind::Lars;
  unsigned distance = 0;     // LarsPfd / PartPfd / Static; 0 = prefetching off for Static
  std::string retention;     // Static only

  /// LARS, LARS+PFD_<N>, LARS+NST, PART+RPC, PART+PFD_<N>, PART+NST, SRAM+NST,
  /// STATIC:<retention>:<distance|off>. Throws std::invalid_argument.
  static Policy parse(std::string_view name);
  std::string name() const;
};

struct ExperimentConfig {
  SimConfig sim;
  RetentionSet retentions = RetentionSet::standard();
  PartThresholds thresholds;
  unsigned degree = 4;              // prefetch degree outside PART sampling
  unsigned lars_pfd_degree = 2;     // the uniform-distance baseline's moderate degree
  bool trigger_on_expiration_miss = true;
  NstThresholds nst;
};

struct PolicyResult {
  std::string policy;
  std::string retention;    // unit the bulk of the trace ran on
  std::string distance;     // "1".."32", "NST" or "off"
  std::optional<TuningDecision> decision;
  std::optional<std::string> lars_choice;
  CounterSet counters;
  EnergyLedger ledger;
  EnergyReport report;
};

/// Runs the policy over the whole trace: the sampling phase (for tuning
/// policies) followed by the remainder under the decided configuration. The
/// report includes sampling costs and migration overheads.
PolicyResult run_policy(const TraceSource& workload, const Policy& policy, const ExperimentConfig& config);

/// Fixed unit and distance for the whole trace; distance nullopt disables prefetching.
PolicyResult run_static(const TraceSource& workload, const RetentionConfig& unit, std::optional<unsigned> distance, const ExperimentConfig& config);
} // namespace sttsim

#endif
