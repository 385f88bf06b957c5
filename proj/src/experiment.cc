#include "sttsim/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace sttsim
{
namespace
{
std::string trim(std::string_view s)
{
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',')
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty())
      out.push_back(item);
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view text, std::string_view field)
{
  const auto s = trim(text);
  try {
    std::size_t used = 0;
    if (s.empty() || s.front() == '-')
      throw std::invalid_argument("negative");
    const auto v = std::stoull(s, &used, 0);
    if (used != s.size())
      throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(fmt::format("{}: expected an unsigned integer, got '{}'", field, s));
  }
}

std::int64_t parse_int(std::string_view text, std::string_view field)
{
  const auto s = trim(text);
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used, 0);
    if (used != s.size())
      throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(fmt::format("{}: expected an integer, got '{}'", field, s));
  }
}

double parse_double(std::string_view text, std::string_view field)
{
  const auto s = trim(text);
  double v = 0;
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  if (!(in >> v) || !in.eof())
    throw UsageError(fmt::format("{}: expected a number, got '{}'", field, s));
  return v;
}

bool parse_bool(std::string_view text, std::string_view field)
{
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on")
    return true;
  if (s == "false" || s == "0" || s == "no" || s == "off")
    return false;
  throw UsageError(fmt::format("{}: expected true/false, got '{}'", field, s));
}

StridedStream revisit(std::uint64_t pc, address_t base, std::int64_t stride, std::size_t blocks, cycle_t inter, cycle_t gap, std::size_t events,
                      AccessKind kind = AccessKind::Read, cycle_t start = 0)
{
  StridedStream s;
  s.pc = pc;
  s.base = base;
  s.stride = stride;
  s.count = blocks;
  s.start_cycle = start;
  s.inter_arrival = inter;
  s.kind = kind;
  s.passes = std::max<std::size_t>(1, (events + blocks - 1) / blocks);
  s.pass_gap = gap;
  return s;
}

RandomStream uniform(std::uint64_t pc, address_t lo, address_t hi, std::size_t events, cycle_t inter, unsigned write_permille = 0)
{
  RandomStream r;
  r.pc = pc;
  r.lo = lo;
  r.hi = hi;
  r.count = std::max<std::size_t>(1, events);
  r.inter_arrival = inter;
  r.write_permille = write_permille;
  r.align = 8;
  return r;
}

std::string distance_label(std::optional<unsigned> d) { return d ? std::to_string(*d) : std::string("off"); }

template <typename Fn>
auto parallel_map(std::size_t n, unsigned jobs, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = fn(i);
    return out;
  }
  for (std::size_t base = 0; base < n; base += jobs) {
    std::vector<std::future<R>> batch;
    for (std::size_t i = base; i < std::min(n, base + jobs); ++i)
      batch.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = 0; i < batch.size(); ++i)
      out[base + i] = batch[i].get();
  }
  return out;
}

void write_table_file(const std::filesystem::path& path, const csv::Table& table)
{
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write " + path.string());
  csv::write(out, table);
}
} // namespace

void ExperimentSpec::validate(bool need_policies) const
{
  if (need_policies && policies.empty())
    throw UsageError("policies: at least one policy is required");
  for (const auto& p : policies) {
    try {
      Policy::parse(p);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("policies: ") + e.what());
    }
  }
  if (!baseline.empty()) {
    std::string canonical;
    try {
      canonical = Policy::parse(baseline).name();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("baseline: ") + e.what());
    }
    if (std::none_of(policies.begin(), policies.end(), [&](const std::string& p) { return Policy::parse(p).name() == canonical; }))
      throw UsageError("baseline: '" + baseline + "' is not one of the policies");
  }
  try {
    config.sim.geometry.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("cache: ") + e.what());
  }
  if (config.sim.timing.mshr_entries == 0)
    throw UsageError("cache.mshr_entries: must be positive");
  if (config.sim.timing.clock_hz == 0)
    throw UsageError("cache.clock_hz: must be positive");
  if (config.degree == 0 || config.lars_pfd_degree == 0)
    throw UsageError("prefetch.degree: must be positive");
  try {
    config.retentions.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("tuning.retentions: ") + e.what());
  }
  try {
    config.thresholds.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("tuning: ") + e.what());
  }
  if (jobs == 0)
    throw UsageError("jobs: must be positive");
}

StreamDescriptor parse_stream(std::string_view text)
{
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw UsageError(fmt::format("stream '{}': expected strided:... or random:...", text));
  const auto kind = trim(text.substr(0, colon));
  std::map<std::string, std::string> kv;
  for (const auto& item : split_list(text.substr(colon + 1))) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw UsageError(fmt::format("stream '{}': expected key=value, got '{}'", text, item));
    kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end())
      return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };

  StreamDescriptor out;
  if (kind == "strided") {
    StridedStream s;
    if (auto v = take("pc"))
      s.pc = parse_uint(*v, "stream.pc");
    if (auto v = take("base"))
      s.base = parse_uint(*v, "stream.base");
    if (auto v = take("stride"))
      s.stride = parse_int(*v, "stream.stride");
    if (auto v = take("count"))
      s.count = parse_uint(*v, "stream.count");
    if (auto v = take("start"))
      s.start_cycle = parse_uint(*v, "stream.start");
    if (auto v = take("inter"))
      s.inter_arrival = parse_uint(*v, "stream.inter");
    if (auto v = take("passes"))
      s.passes = parse_uint(*v, "stream.passes");
    if (auto v = take("gap"))
      s.pass_gap = parse_uint(*v, "stream.gap");
    if (auto v = take("kind")) {
      if (*v == "R")
        s.kind = AccessKind::Read;
      else if (*v == "W")
        s.kind = AccessKind::Write;
      else
        throw UsageError("stream.kind: expected R or W");
    }
    if (s.stride == 0 || s.count == 0 || s.passes == 0)
      throw UsageError(fmt::format("stream '{}': stride must be non-zero, count and passes positive", text));
    out = s;
  } else if (kind == "random") {
    RandomStream r;
    if (auto v = take("pc"))
      r.pc = parse_uint(*v, "stream.pc");
    if (auto v = take("lo"))
      r.lo = parse_uint(*v, "stream.lo");
    if (auto v = take("hi"))
      r.hi = parse_uint(*v, "stream.hi");
    if (auto v = take("count"))
      r.count = parse_uint(*v, "stream.count");
    if (auto v = take("start"))
      r.start_cycle = parse_uint(*v, "stream.start");
    if (auto v = take("inter"))
      r.inter_arrival = parse_uint(*v, "stream.inter");
    if (auto v = take("write"))
      r.write_permille = static_cast<unsigned>(parse_uint(*v, "stream.write"));
    if (auto v = take("align"))
      r.align = parse_uint(*v, "stream.align");
    if (r.hi <= r.lo || r.count == 0 || r.align == 0 || r.write_permille > 1000)
      throw UsageError(fmt::format("stream '{}': needs lo < hi, count > 0, align > 0, write <= 1000", text));
    out = r;
  } else {
    throw UsageError(fmt::format("stream '{}': unknown stream kind '{}'", text, kind));
  }
  if (!kv.empty())
    throw UsageError(fmt::format("stream '{}': unknown key '{}'", text, kv.begin()->first));
  return out;
}

std::vector<std::string> preset_names()
{
  return {"revisit-short", "revisit-mid",  "revisit-long", "scan",           "random-hot",  "random-cold",
          "stream-random", "dual-lifetime", "write-mix",   "descending-revisit", "sparse-stride"};
}

std::vector<StreamDescriptor> workload_preset(std::string_view name, std::size_t n)
{
  // Gaps are in cycles at 2 GHz: 25us = 50'000 cycles, 100us = 200'000, 1ms = 2'000'000.
  if (name == "revisit-short")
    return {revisit(0x504, 0x10000, 64, 256, 20, 30'000, n)};
  if (name == "revisit-mid")
    return {revisit(0x504, 0x10000, 64, 256, 20, 130'000, n)};
  if (name == "revisit-long")
    return {revisit(0x504, 0x10000, 64, 256, 20, 600'000, n)};
  if (name == "scan")
    return {revisit(0x610, 0x400000, 64, n, 20, 0, n)};
  if (name == "random-hot")
    return {uniform(0x700, 0x200000, 0x200000 + 16 * 1024, n, 20, 100)};
  if (name == "random-cold")
    return {uniform(0x710, 0x1000000, 0x1000000 + 8 * 1024 * 1024, n, 20, 100)};
  if (name == "stream-random")
    return {revisit(0x504, 0x10000, 64, 192, 40, 90'000, n / 2), uniform(0x720, 0x300000, 0x300000 + 8 * 1024, n / 2, 40, 200)};
  if (name == "dual-lifetime")
    return {revisit(0x504, 0x10000, 64, 128, 40, 20'000, n / 2), revisit(0x508, 0x80000, 64, 128, 40, 260'000, n / 2, AccessKind::Read, 10)};
  if (name == "write-mix")
    return {revisit(0x530, 0x20000, 64, 128, 40, 70'000, n / 2, AccessKind::Write), uniform(0x730, 0x500000, 0x500000 + 12 * 1024, n / 2, 40, 500)};
  if (name == "descending-revisit")
    return {revisit(0x540, 0x40000 + 255 * 64, -64, 256, 20, 160'000, n)};
  if (name == "sparse-stride")
    return {revisit(0x550, 0x60000, 256, 96, 20, 45'000, n)};
  throw UsageError(fmt::format("workload.preset: unknown preset '{}'", name));
}

RetentionSet parse_retention_set(std::string_view text)
{
  RetentionSet set;
  for (const auto& item : split_list(text)) {
    auto unit = devices::find(item);
    if (!unit || unit->never_expires())
      throw UsageError(fmt::format("tuning.retentions: unknown STTRAM retention '{}'", item));
    set.units.push_back(*unit);
  }
  std::sort(set.units.begin(), set.units.end(), [](const RetentionConfig& a, const RetentionConfig& b) { return a.retention_ns > b.retention_ns; });
  if (set.units.empty())
    throw UsageError("tuning.retentions: empty retention set");
  return set;
}

void apply_config(std::istream& in, ExperimentSpec& spec)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(fmt::format("config: {} (line {})", e.message(), e.line()));
  }

  auto& cfg = spec.config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw UsageError(fmt::format("config: key '{}' must live in a section", section));
    for (const auto& [key, node] : body) {
      const auto& v = node.data();
      const auto field = section + "." + key;
      if (section == "experiment") {
        if (key == "workload")
          spec.workload = trim(v);
        else if (key == "trace")
          spec.trace_path = trim(v);
        else if (key == "trace_format") {
          if (trim(v) == "text")
            spec.trace_format = TraceFormat::Text;
          else if (trim(v) == "binary")
            spec.trace_format = TraceFormat::Binary;
          else
            throw UsageError(field + ": expected text or binary");
        } else if (key == "policies")
          spec.policies = split_list(v);
        else if (key == "baseline")
          spec.baseline = trim(v);
        else if (key == "output")
          spec.output_dir = trim(v);
        else if (key == "tuning_log")
          spec.tuning_log = trim(v);
        else if (key == "seed")
          spec.seed = parse_uint(v, field);
        else if (key == "jobs")
          spec.jobs = static_cast<unsigned>(parse_uint(v, field));
        else
          throw UsageError("config: unknown key '" + field + "'");
      } else if (section == "workload") {
        if (key == "preset")
          spec.preset = trim(v);
        else if (key == "events")
          spec.preset_events = parse_uint(v, field);
        else if (key.starts_with("stream"))
          spec.streams.push_back(parse_stream(v));
        else
          throw UsageError("config: unknown key '" + field + "'");
      } else if (section == "cache") {
        if (key == "capacity")
          cfg.sim.geometry.capacity = parse_uint(v, field);
        else if (key == "block_size")
          cfg.sim.geometry.block_size = parse_uint(v, field);
        else if (key == "associativity")
          cfg.sim.geometry.associativity = parse_uint(v, field);
        else if (key == "memory_latency")
          cfg.sim.timing.memory_latency = parse_uint(v, field);
        else if (key == "mshr_entries")
          cfg.sim.timing.mshr_entries = parse_uint(v, field);
        else if (key == "clock_hz")
          cfg.sim.timing.clock_hz = parse_uint(v, field);
        else
          throw UsageError("config: unknown key '" + field + "'");
      } else if (section == "prefetch") {
        if (key == "degree")
          cfg.degree = static_cast<unsigned>(parse_uint(v, field));
        else if (key == "lars_pfd_degree")
          cfg.lars_pfd_degree = static_cast<unsigned>(parse_uint(v, field));
        else if (key == "trigger_on_expiration_miss")
          cfg.trigger_on_expiration_miss = parse_bool(v, field);
        else if (key == "nst_window")
          cfg.nst.window_demand_accesses = parse_uint(v, field);
        else if (key == "nst_raise_above")
          cfg.nst.raise_above = parse_double(v, field);
        else if (key == "nst_lower_below")
          cfg.nst.lower_below = parse_double(v, field);
        else
          throw UsageError("config: unknown key '" + field + "'");
      } else if (section == "tuning") {
        if (key == "retentions")
          cfg.retentions = parse_retention_set(v);
        else if (key == "window")
          cfg.thresholds.sampling_window = parse_uint(v, field);
        else if (key == "min_all_pf")
          cfg.thresholds.min_all_pf = parse_double(v, field);
        else if (key == "min_expired_pf")
          cfg.thresholds.min_expired_pf_for_base = parse_double(v, field);
        else if (key == "growth_factor")
          cfg.thresholds.growth_factor = parse_double(v, field);
        else if (key == "miss_tolerance")
          cfg.thresholds.miss_tolerance = parse_double(v, field);
        else
          throw UsageError("config: unknown key '" + field + "'");
      } else {
        throw UsageError("config: unknown section '" + section + "'");
      }
    }
  }
}

void load_config_file(const std::filesystem::path& path, ExperimentSpec& spec)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("config: cannot open " + path.string());
  apply_config(in, spec);
}

TraceSource materialize_trace(const ExperimentSpec& spec)
{
  if (spec.trace_path) {
    try {
      return load_trace(*spec.trace_path, spec.trace_format);
    } catch (const TraceError& e) {
      throw DataError(e.what());
    }
  }
  if (spec.preset)
    return gen_mixed(workload_preset(*spec.preset, spec.preset_events), spec.seed);
  if (!spec.streams.empty())
    return gen_mixed(spec.streams, spec.seed);
  throw UsageError("trace: set a trace file, a workload preset or at least one stream");
}

csv::Table run_table(const std::string& workload, std::span<const PolicyResult> results)
{
  csv::Table t;
  t.header = {"schema",          "workload",          "policy",           "retention",
              "distance",        "tuning_mode",       "energy_nj",        "energy_fj",
              "dynamic_nj",      "leakage_nj",        "migration_nj",     "latency_cycles",
              "elapsed_cycles",  "migrations",        "all_pf",           "expired_pf",
              "miss_rate",       "demand_accesses",   "demand_hits",      "demand_misses",
              "expiration_misses", "total_prefetches", "total_mshr_requests", "expired_unused_prefetches",
              "late_prefetches", "timely_prefetches", "prefetchable_expired_reloads", "writebacks",
              "fills",           "evictions",         "expirations",      "stall_cycles"};
  for (const auto& r : results) {
    const auto& c = r.counters;
    const auto pf = ratios(c);
    std::string mode = "-";
    if (r.decision)
      mode = to_string(r.decision->mode);
    else if (r.lars_choice)
      mode = "MissBased";
    t.rows.push_back({std::string(kRunSchema),
                      workload,
                      r.policy,
                      r.retention,
                      r.distance,
                      mode,
                      csv::nanojoules3(r.report.total.value),
                      std::to_string(r.report.total.value),
                      csv::nanojoules3(r.report.dynamic.value),
                      csv::nanojoules3(r.report.leakage.value),
                      csv::nanojoules3(r.report.migration.value),
                      std::to_string(r.report.total_latency_cycles),
                      std::to_string(r.ledger.elapsed_cycles),
                      std::to_string(r.ledger.migrations),
                      csv::fixed(pf.all_pf, 6),
                      csv::fixed(pf.expired_pf, 6),
                      csv::fixed(c.miss_rate(), 6),
                      std::to_string(c.demand_accesses),
                      std::to_string(c.demand_hits),
                      std::to_string(c.demand_misses),
                      std::to_string(c.expiration_misses),
                      std::to_string(c.total_prefetches),
                      std::to_string(c.total_mshr_requests),
                      std::to_string(c.expired_unused_prefetches),
                      std::to_string(c.late_prefetches),
                      std::to_string(c.timely_prefetches),
                      std::to_string(c.prefetchable_expired_reloads),
                      std::to_string(c.writebacks),
                      std::to_string(c.fills()),
                      std::to_string(c.evictions),
                      std::to_string(c.expirations),
                      std::to_string(c.stall_cycles)});
  }
  return t;
}

RunOutput cmd_run(const ExperimentSpec& spec, std::ostream& log)
{
  spec.validate(true);
  const auto trace = materialize_trace(spec);

  std::vector<Policy> policies;
  for (const auto& p : spec.policies)
    policies.push_back(Policy::parse(p));

  RunOutput out;
  try {
    out.results = parallel_map(policies.size(), spec.jobs, [&](std::size_t i) { return run_policy(trace, policies[i], spec.config); });
  } catch (const InsufficientSamples& e) {
    throw DataError(std::string("trace too short for tuning: ") + e.what());
  }

  std::filesystem::create_directories(spec.output_dir);
  out.run_table = run_table(spec.workload, out.results);
  write_table_file(spec.output_dir / "run.csv", out.run_table);

  if (spec.tuning_log) {
    std::ofstream tl(*spec.tuning_log);
    if (!tl)
      throw DataError("cannot write " + spec.tuning_log->string());
    for (const auto& r : out.results) {
      if (!r.decision)
        continue;
      tl << "# policy " << r.policy << '\n';
      write_tuning_log(tl, *r.decision);
    }
  }

  log << fmt::format("workload {} ({} events); energy counts cache-side dynamic, leakage and migration only\n", spec.workload, trace.size());
  if (!spec.baseline.empty() && out.results.size() >= 2) {
    const auto base_name = Policy::parse(spec.baseline).name();
    const auto base_idx = static_cast<std::size_t>(
        std::find_if(out.results.begin(), out.results.end(), [&](const PolicyResult& r) { return r.policy == base_name; }) - out.results.begin());
    std::vector<LabeledReport> labeled;
    for (const auto& r : out.results)
      labeled.push_back({r.policy, r.report});
    try {
      out.normalized = compare(labeled, base_idx);
    } catch (const std::domain_error& e) {
      throw DataError(e.what());
    }
    csv::Table& t = out.comparison_table;
    t.header = {"workload", "policy", "baseline", "retention", "distance", "energy_nj", "latency_cycles", "energy_ratio", "latency_ratio",
                "energy_reduction_pct", "latency_reduction_pct"};
    std::size_t k = 0;
    for (std::size_t i = 0; i < out.results.size(); ++i) {
      const auto& r = out.results[i];
      NormalizedRow row{r.policy, 1.0, 1.0, 0.0, 0.0};
      if (i != base_idx)
        row = out.normalized[k++];
      t.rows.push_back({spec.workload, r.policy, base_name, r.retention, r.distance, csv::nanojoules3(r.report.total.value),
                        std::to_string(r.report.total_latency_cycles), csv::fixed(row.energy_ratio, 6), csv::fixed(row.latency_ratio, 6),
                        csv::fixed(row.energy_reduction_pct, 3), csv::fixed(row.latency_reduction_pct, 3)});
    }
    write_table_file(spec.output_dir / "comparison.csv", t);
    csv::write_aligned(log, t);
  } else {
    csv::Table brief;
    brief.header = {"policy", "retention", "distance", "energy_nj", "latency_cycles"};
    for (const auto& r : out.results)
      brief.rows.push_back({r.policy, r.retention, r.distance, csv::nanojoules3(r.report.total.value), std::to_string(r.report.total_latency_cycles)});
    csv::write_aligned(log, brief);
  }
  return out;
}

SweepAxis parse_sweep_axis(std::string_view s)
{
  if (s == "retention")
    return SweepAxis::Retention;
  if (s == "distance")
    return SweepAxis::Distance;
  if (s == "both")
    return SweepAxis::Both;
  throw UsageError(fmt::format("axis: expected retention, distance or both, got '{}'", s));
}

std::vector<SweepRow> sweep_grid(const TraceSource& trace, const ExperimentConfig& config, const SweepOptions& options, unsigned jobs)
{
  std::vector<RetentionConfig> units;
  if (options.axis == SweepAxis::Distance) {
    auto u = devices::find(options.fixed_retention);
    if (!u)
      throw UsageError("retention: unknown retention '" + options.fixed_retention + "'");
    units.push_back(*u);
  } else if (options.retentions) {
    for (const auto& label : *options.retentions) {
      auto u = devices::find(label);
      if (!u)
        throw UsageError("retentions: unknown retention '" + label + "'");
      units.push_back(*u);
    }
  } else {
    units = config.retentions.units;
  }

  std::vector<std::optional<unsigned>> distances;
  if (options.axis == SweepAxis::Retention) {
    distances.push_back(options.fixed_distance);
  } else if (options.distances) {
    distances = *options.distances;
  } else {
    distances.assign(kPrefetchDistances.begin(), kPrefetchDistances.end());
  }
  if (units.empty())
    throw UsageError("retentions: sweep axis is empty");
  if (distances.empty())
    throw UsageError("distances: sweep axis is empty");
  for (const auto& d : distances)
    if (d && !is_valid_distance(*d))
      throw UsageError("distances: must be one of 1, 4, 8, 16, 32 or off");

  std::vector<std::pair<RetentionConfig, std::optional<unsigned>>> grid;
  for (const auto& u : units)
    for (const auto& d : distances)
      grid.emplace_back(u, d);

  auto results = parallel_map(grid.size(), jobs, [&](std::size_t i) { return run_static(trace, grid[i].first, grid[i].second, config); });

  std::vector<SweepRow> rows;
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows.push_back({grid[i].first.label, grid[i].second, std::move(results[i]), false});
    if (rows[i].result.report.total < rows[best].result.report.total)
      best = i;
  }
  rows[best].argmin = true;
  return rows;
}

csv::Table sweep_table(const std::string& workload, std::span<const SweepRow> rows)
{
  csv::Table t;
  t.header = {"schema",           "workload",         "retention",      "distance",         "energy_nj",  "energy_fj",
              "dynamic_nj",       "leakage_nj",       "latency_cycles", "demand_misses",    "expiration_misses",
              "total_prefetches", "expired_unused_prefetches", "all_pf", "expired_pf", "prefetchable_expired_reloads", "argmin"};
  for (const auto& row : rows) {
    const auto& r = row.result;
    const auto pf = ratios(r.counters);
    t.rows.push_back({std::string(kSweepSchema), workload, row.retention, distance_label(row.distance), csv::nanojoules3(r.report.total.value),
                      std::to_string(r.report.total.value), csv::nanojoules3(r.report.dynamic.value), csv::nanojoules3(r.report.leakage.value),
                      std::to_string(r.report.total_latency_cycles), std::to_string(r.counters.demand_misses),
                      std::to_string(r.counters.expiration_misses), std::to_string(r.counters.total_prefetches),
                      std::to_string(r.counters.expired_unused_prefetches), csv::fixed(pf.all_pf, 6), csv::fixed(pf.expired_pf, 6),
                      std::to_string(r.counters.prefetchable_expired_reloads), row.argmin ? "1" : "0"});
  }
  return t;
}

std::vector<SweepRow> cmd_sweep(const ExperimentSpec& spec, const SweepOptions& options, std::ostream& log)
{
  spec.validate(false);
  const auto trace = materialize_trace(spec);
  auto rows = sweep_grid(trace, spec.config, options, spec.jobs);
  std::filesystem::create_directories(spec.output_dir);
  const auto table = sweep_table(spec.workload, rows);
  write_table_file(spec.output_dir / "sweep.csv", table);
  csv::write_aligned(log, table);
  return rows;
}

ReportOutput build_report(std::span<const csv::Table> runs, const std::string& baseline)
{
  struct Cell {
    double energy = 0;
    double latency = 0;
  };
  std::vector<std::string> workloads;
  std::vector<std::string> policies;
  std::map<std::string, std::map<std::string, Cell>> cells;

  for (const auto& t : runs) {
    std::size_t c_schema = 0, c_work = 0, c_pol = 0, c_energy = 0, c_lat = 0;
    try {
      c_schema = t.column("schema");
      c_work = t.column("workload");
      c_pol = t.column("policy");
      c_energy = t.column("energy_fj");
      c_lat = t.column("latency_cycles");
    } catch (const std::out_of_range& e) {
      throw DataError(std::string("schema mismatch: ") + e.what());
    }
    for (const auto& row : t.rows) {
      if (row[c_schema] != kRunSchema)
        throw DataError("schema mismatch in column 'schema': expected " + std::string(kRunSchema) + ", got " + row[c_schema]);
      const auto& w = row[c_work];
      const auto& p = row[c_pol];
      if (std::find(workloads.begin(), workloads.end(), w) == workloads.end())
        workloads.push_back(w);
      if (std::find(policies.begin(), policies.end(), p) == policies.end())
        policies.push_back(p);
      try {
        cells[w][p] = {std::stod(row[c_energy]), std::stod(row[c_lat])};
      } catch (const std::exception&) {
        throw DataError("non-numeric value in column 'energy_fj' or 'latency_cycles' for workload " + w);
      }
    }
  }
  if (std::find(policies.begin(), policies.end(), baseline) == policies.end())
    throw DataError("missing baseline column '" + baseline + "'");

  ReportOutput out;
  out.energy.header.push_back("workload");
  out.energy.header.insert(out.energy.header.end(), policies.begin(), policies.end());
  out.latency.header = out.energy.header;

  std::map<std::string, std::vector<double>> log_e, log_l;
  for (const auto& w : workloads) {
    auto& row_cells = cells[w];
    auto base = row_cells.find(baseline);
    if (base == row_cells.end())
      throw DataError("missing baseline column '" + baseline + "' for workload '" + w + "'");
    if (base->second.energy <= 0 || base->second.latency <= 0)
      throw DataError("baseline '" + baseline + "' has zero energy or latency for workload '" + w + "'");
    std::vector<std::string> er{w}, lr{w};
    for (const auto& p : policies) {
      auto it = row_cells.find(p);
      if (it == row_cells.end()) {
        er.emplace_back();
        lr.emplace_back();
        continue;
      }
      const double e = it->second.energy / base->second.energy;
      const double l = it->second.latency / base->second.latency;
      log_e[p].push_back(std::log(e));
      log_l[p].push_back(std::log(l));
      er.push_back(csv::fixed(e, 6));
      lr.push_back(csv::fixed(l, 6));
    }
    out.energy.rows.push_back(std::move(er));
    out.latency.rows.push_back(std::move(lr));
  }
  auto geomean = [](const std::vector<double>& logs) {
    double s = 0;
    for (double v : logs)
      s += v;
    return std::exp(s / static_cast<double>(logs.size()));
  };
  std::vector<std::string> ge{"geomean"}, gl{"geomean"};
  for (const auto& p : policies) {
    ge.push_back(log_e[p].empty() ? std::string() : csv::fixed(geomean(log_e[p]), 6));
    gl.push_back(log_l[p].empty() ? std::string() : csv::fixed(geomean(log_l[p]), 6));
  }
  out.energy.rows.push_back(std::move(ge));
  out.latency.rows.push_back(std::move(gl));
  return out;
}

ReportOutput cmd_report(std::span<const std::filesystem::path> inputs, const std::string& baseline, const std::filesystem::path& output_dir, std::ostream& log)
{
  if (inputs.empty())
    throw UsageError("inputs: at least one run CSV is required");
  if (baseline.empty())
    throw UsageError("baseline: a baseline policy is required");
  std::vector<csv::Table> tables;
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in)
      throw DataError("cannot open " + p.string());
    try {
      tables.push_back(csv::read(in));
    } catch (const std::runtime_error& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  }
  auto out = build_report(tables, baseline);
  std::filesystem::create_directories(output_dir);
  write_table_file(output_dir / "report_energy.csv", out.energy);
  write_table_file(output_dir / "report_latency.csv", out.latency);
  log << "normalized energy (baseline " << baseline << ")\n";
  csv::write_aligned(log, out.energy);
  log << "\nnormalized latency (baseline " << baseline << ")\n";
  csv::write_aligned(log, out.latency);
  return out;
}
} // namespace sttsim
