#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sttsim/experiment.h"

namespace
{
using namespace sttsim;

struct CommonFlags {
  std::string config;
  std::string trace;
  std::string trace_format;
  std::string preset;
  std::size_t events = 0;
  std::vector<std::string> streams;
  std::string workload;
  std::string output;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::string retentions;
  bool no_expired_trigger = false;
};

void add_common(CLI::App* app, CommonFlags& f)
{
  app->add_option("-c,--config", f.config, "INI configuration file; flags below override it");
  app->add_option("--trace", f.trace, "Trace file");
  app->add_option("--trace-format", f.trace_format, "text or binary")->check(CLI::IsMember({"text", "binary"}));
  app->add_option("--preset", f.preset, "Synthetic workload preset")->check(CLI::IsMember(preset_names()));
  app->add_option("--events", f.events, "Event count for presets");
  app->add_option("--stream", f.streams, "Synthetic stream (strided:... or random:...), repeatable");
  app->add_option("--workload", f.workload, "Workload label used in output rows");
  app->add_option("-o,--output", f.output, "Output directory");
  app->add_option("--seed", f.seed, "Seed for synthetic streams");
  app->add_option("-j,--jobs", f.jobs, "Parallel workers");
  app->add_option("--retentions", f.retentions, "Retention set, e.g. 1ms,100us,75us,50us,25us");
  app->add_flag("--no-expired-trigger", f.no_expired_trigger, "Do not trigger prefetches on expiration misses");
}

ExperimentSpec build_spec(const CommonFlags& f, CLI::App* app)
{
  ExperimentSpec spec;
  if (!f.config.empty())
    load_config_file(f.config, spec);
  if (!f.trace.empty()) {
    spec.trace_path = f.trace;
    spec.preset.reset();
    spec.streams.clear();
  }
  if (!f.trace_format.empty())
    spec.trace_format = f.trace_format == "binary" ? TraceFormat::Binary : TraceFormat::Text;
  if (!f.preset.empty()) {
    spec.preset = f.preset;
    spec.trace_path.reset();
  }
  if (app->count("--events"))
    spec.preset_events = f.events;
  if (!f.streams.empty()) {
    spec.streams.clear();
    for (const auto& s : f.streams)
      spec.streams.push_back(parse_stream(s));
  }
  if (!f.workload.empty())
    spec.workload = f.workload;
  else if (spec.workload == "workload" && spec.preset)
    spec.workload = *spec.preset;
  if (!f.output.empty())
    spec.output_dir = f.output;
  if (app->count("--seed"))
    spec.seed = f.seed;
  if (app->count("--jobs"))
    spec.jobs = f.jobs;
  if (!f.retentions.empty())
    spec.config.retentions = parse_retention_set(f.retentions);
  if (f.no_expired_trigger)
    spec.config.trigger_on_expiration_miss = false;
  return spec;
}

std::vector<std::optional<unsigned>> parse_distance_list(const std::vector<std::string>& items)
{
  std::vector<std::optional<unsigned>> out;
  for (const auto& s : items) {
    if (s == "off") {
      out.emplace_back();
      continue;
    }
    try {
      std::size_t used = 0;
      const auto v = std::stoul(s, &used);
      if (used != s.size())
        throw std::invalid_argument(s);
      out.emplace_back(static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw UsageError("distances: expected a number or 'off', got '" + s + "'");
    }
  }
  return out;
}
} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Reduced-retention STTRAM L1 cache simulator with prefetch-aware retention tuning"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::vector<std::string> policies;
  std::string baseline;
  std::string tuning_log;
  auto* run = app.add_subcommand("run", "Run policies on one workload and compare them");
  add_common(run, run_flags);
  run->add_option("-p,--policy", policies, "Policy (LARS, LARS+PFD_N, LARS+NST, PART+RPC, PART+PFD_N, PART+NST, SRAM+NST, STATIC:<ret>:<dist|off>)")
      ->delimiter(',');
  run->add_option("-b,--baseline", baseline, "Baseline policy for normalization");
  run->add_option("--tuning-log", tuning_log, "Write the tuning trajectory to this file");

  CommonFlags sweep_flags;
  std::string axis = "both";
  std::vector<std::string> sweep_retentions;
  std::vector<std::string> sweep_distances;
  std::string fixed_retention;
  std::string fixed_distance;
  auto* sweep = app.add_subcommand("sweep", "Brute-force grid over static retention and distance");
  add_common(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "retention, distance or both");
  sweep->add_option("--grid-retentions", sweep_retentions, "Retentions on the grid")->delimiter(',');
  sweep->add_option("--grid-distances", sweep_distances, "Distances on the grid (number or off)")->delimiter(',');
  sweep->add_option("--fixed-retention", fixed_retention, "Retention when the retention axis is not swept");
  sweep->add_option("--fixed-distance", fixed_distance, "Distance when the distance axis is not swept (number or off)");

  std::vector<std::string> inputs;
  std::string report_baseline;
  std::string report_output = "out";
  auto* report = app.add_subcommand("report", "Merge run.csv files into normalized tables");
  report->add_option("inputs", inputs, "run.csv files")->required();
  report->add_option("-b,--baseline", report_baseline, "Baseline policy")->required();
  report->add_option("-o,--output", report_output, "Output directory");

  CommonFlags gen_flags;
  std::string gen_out;
  std::string gen_format = "text";
  auto* gen = app.add_subcommand("gen-trace", "Write a synthetic trace to a file");
  add_common(gen, gen_flags);
  gen->add_option("--out", gen_out, "Output trace path")->required();
  gen->add_option("--format", gen_format, "text or binary")->check(CLI::IsMember({"text", "binary"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      auto spec = build_spec(run_flags, run);
      if (!policies.empty())
        spec.policies = policies;
      if (!baseline.empty())
        spec.baseline = baseline;
      if (!tuning_log.empty())
        spec.tuning_log = tuning_log;
      cmd_run(spec, std::cout);
    } else if (*sweep) {
      auto spec = build_spec(sweep_flags, sweep);
      SweepOptions opt;
      opt.axis = parse_sweep_axis(axis);
      if (sweep->count("--grid-retentions"))
        opt.retentions = sweep_retentions;
      if (sweep->count("--grid-distances"))
        opt.distances = parse_distance_list(sweep_distances);
      if (!fixed_retention.empty())
        opt.fixed_retention = fixed_retention;
      if (!fixed_distance.empty())
        opt.fixed_distance = parse_distance_list({fixed_distance}).front();
      cmd_sweep(spec, opt, std::cout);
    } else if (*report) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      cmd_report(paths, report_baseline, report_output, std::cout);
    } else if (*gen) {
      auto spec = build_spec(gen_flags, gen);
      const auto trace = materialize_trace(spec);
      write_trace(gen_out, trace, gen_format == "binary" ? TraceFormat::Binary : TraceFormat::Text);
      std::cout << "wrote " << trace.size() << " events to " << gen_out << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const TraceError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
