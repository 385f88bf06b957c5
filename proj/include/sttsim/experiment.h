#ifndef STTSIM_EXPERIMENT_H
#define STTSIM_EXPERIMENT_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sttsim/csv.h"
#include "sttsim/policy.h"
#include "sttsim/trace.h"

namespace sttsim
{
/// Bad command line or configuration; the CLI exits with status 1.
class UsageError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Bad input data (trace, CSV); the CLI exits with status 2.
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kRunSchema = "sttsim-run/1";
inline constexpr std::string_view kSweepSchema = "sttsim-sweep/1";

struct ExperimentSpec {
  std::string workload = "workload";
  std::optional<std::filesystem::path> trace_path;
  TraceFormat trace_format = TraceFormat::Text;
  std::vector<StreamDescriptor> streams;
  std::optional<std::string> preset;
  std::size_t preset_events = 1'500'000;

  std::vector<std::string> policies;
  std::string baseline;
  ExperimentConfig config;

  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> tuning_log;
  std::uint64_t seed = 1;
  unsigned jobs = 1;

  /// Throws UsageError naming the offending field.
  void validate(bool need_policies) const;
};

/// `strided:pc=0x504,base=0x10000,stride=64,count=512,start=0,inter=20,passes=4,gap=60000,kind=R`
/// `random:pc=0x700,lo=0x100000,hi=0x180000,count=4096,start=0,inter=20,write=100,align=8`
StreamDescriptor parse_stream(std::string_view text);

/// Named synthetic workloads. Each mixes streams whose blocks live for
/// different lengths of time between reuses.
std::vector<std::string> preset_names();
std::vector<StreamDescriptor> workload_preset(std::string_view name, std::size_t target_events);

/// INI-style configuration: sections [experiment], [workload], [cache],
/// [prefetch], [tuning]. Throws UsageError on unknown keys or bad values.
void apply_config(std::istream& in, ExperimentSpec& spec);
void load_config_file(const std::filesystem::path& path, ExperimentSpec& spec);

/// Parses a retention list such as "1ms,100us,75us,50us,25us".
RetentionSet parse_retention_set(std::string_view text);

TraceSource materialize_trace(const ExperimentSpec& spec);

struct RunOutput {
  std::vector<PolicyResult> results;
  std::vector<NormalizedRow> normalized; // non-baseline policies against the baseline
  csv::Table run_table;
  csv::Table comparison_table;
};

/// Runs every policy; writes run.csv and comparison.csv (when a baseline is
/// set) into the output directory and prints the comparison to `log`.
RunOutput cmd_run(const ExperimentSpec& spec, std::ostream& log);

enum class SweepAxis { Retention, Distance, Both };
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepOptions {
  SweepAxis axis = SweepAxis::Both;
  std::optional<std::vector<std::string>> retentions;             // unset: the configured retention set
  std::optional<std::vector<std::optional<unsigned>>> distances;  // unset: 1,4,8,16,32; nullopt entry = prefetching off
  std::string fixed_retention = "STT-1ms";     // retention axis off
  std::optional<unsigned> fixed_distance = 16; // distance axis off
};

struct SweepRow {
  std::string retention;
  std::optional<unsigned> distance;
  PolicyResult result;
  bool argmin = false;
};

/// Brute-force grid of static configurations. Rows are ordered by grid key;
/// the lowest-energy row is flagged. Writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const ExperimentSpec& spec, const SweepOptions& options, std::ostream& log);
std::vector<SweepRow> sweep_grid(const TraceSource& trace, const ExperimentConfig& config, const SweepOptions& options, unsigned jobs);

/// Merges run.csv files into per-workload tables normalized to `baseline`
/// (rows = workloads, columns = policies) with a geometric-mean row. Writes
/// report_energy.csv and report_latency.csv.
struct ReportOutput {
  csv::Table energy;
  csv::Table latency;
};
ReportOutput cmd_report(std::span<const std::filesystem::path> inputs, const std::string& baseline, const std::filesystem::path& output_dir, std::ostream& log);
ReportOutput build_report(std::span<const csv::Table> runs, const std::string& baseline);

csv::Table run_table(const std::string& workload, std::span<const PolicyResult> results);
csv::Table sweep_table(const std::string& workload, std::span<const SweepRow> rows);
} // namespace sttsim

#endif
