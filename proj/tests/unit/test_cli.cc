#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sttsim/experiment.h"

using namespace sttsim;
namespace fs = std::filesystem;

namespace
{
fs::path scratch(const std::string& name)
{
  auto dir = fs::temp_directory_path() / "sttsim_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec small_spec(const fs::path& out)
{
  ExperimentSpec spec;
  spec.workload = "rev";
  spec.preset = "revisit-mid";
  spec.preset_events = 60'000;
  spec.config.thresholds.sampling_window = 5'000;
  spec.output_dir = out;
  return spec;
}

csv::Table table_of(const fs::path& p)
{
  std::ifstream in(p);
  return csv::read(in);
}

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(STTSIM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
} // namespace

TEST_CASE("stream descriptors", "[cli]")
{
  const auto s = std::get<StridedStream>(parse_stream("strided:pc=0x504,base=0x10000,stride=-64,count=12,start=5,inter=20,passes=3,gap=600,kind=W"));
  CHECK(s.pc == 0x504);
  CHECK(s.base == 0x10000);
  CHECK(s.stride == -64);
  CHECK(s.count == 12);
  CHECK(s.start_cycle == 5);
  CHECK(s.inter_arrival == 20);
  CHECK(s.passes == 3);
  CHECK(s.pass_gap == 600);
  CHECK(s.kind == AccessKind::Write);

  const auto r = std::get<RandomStream>(parse_stream("random:lo=0,hi=4096,count=100,write=250"));
  CHECK(r.hi == 4096);
  CHECK(r.write_permille == 250);

  CHECK_THROWS_AS(parse_stream("strided:stride=0"), UsageError);
  CHECK_THROWS_AS(parse_stream("strided:bogus=1"), UsageError);
  CHECK_THROWS_AS(parse_stream("zigzag:pc=1"), UsageError);
  CHECK_THROWS_AS(parse_stream("random:lo=10,hi=5"), UsageError);
  CHECK_THROWS_AS(parse_stream("strided:count=x"), UsageError);
}

TEST_CASE("every preset produces a sorted trace", "[cli]")
{
  for (const auto& name : preset_names()) {
    INFO(name);
    const auto streams = workload_preset(name, 20'000);
    const auto t = gen_mixed(streams, 1);
    CHECK(t.size() >= 20'000);
    CHECK(t.size() < 21'000);
  }
  CHECK_THROWS_AS(workload_preset("nope", 10), UsageError);
}

TEST_CASE("configuration file", "[cli]")
{
  std::istringstream in(R"([experiment]
workload = demo
policies = LARS, PART+RPC
baseline = LARS
seed = 9

[workload]
preset = scan
events = 5000
stream1 = strided:pc=1,stride=64,count=4

[cache]
capacity = 16384
mshr_entries = 4

[prefetch]
degree = 2
trigger_on_expiration_miss = false
nst_window = 1024

[tuning]
retentions = 25us, 1ms, 100us
window = 2000
growth_factor = 3
)");
  ExperimentSpec spec;
  apply_config(in, spec);
  CHECK(spec.workload == "demo");
  CHECK(spec.policies == std::vector<std::string>{"LARS", "PART+RPC"});
  CHECK(spec.baseline == "LARS");
  CHECK(spec.seed == 9);
  CHECK(spec.preset == "scan");
  CHECK(spec.preset_events == 5000);
  CHECK(spec.streams.size() == 1);
  CHECK(spec.config.sim.geometry.capacity == 16384);
  CHECK(spec.config.sim.timing.mshr_entries == 4);
  CHECK(spec.config.degree == 2);
  CHECK_FALSE(spec.config.trigger_on_expiration_miss);
  CHECK(spec.config.nst.window_demand_accesses == 1024);
  REQUIRE(spec.config.retentions.units.size() == 3);
  CHECK(spec.config.retentions.units[0].label == "STT-1ms");
  CHECK(spec.config.retentions.units[2].label == "STT-25us");
  CHECK(spec.config.thresholds.sampling_window == 2000);
  CHECK(spec.config.thresholds.growth_factor == 3.0);
  CHECK_NOTHROW(spec.validate(true));
}

TEST_CASE("configuration errors name the field", "[cli]")
{
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    ExperimentSpec spec;
    try {
      apply_config(in, spec);
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[cache]\nsize = 4\n").find("cache.size") != std::string::npos);
  CHECK(message("[cache]\ncapacity = lots\n").find("cache.capacity") != std::string::npos);
  CHECK(message("[mystery]\nx = 1\n").find("mystery") != std::string::npos);
  CHECK(message("[prefetch]\ntrigger_on_expiration_miss = maybe\n").find("prefetch.trigger_on_expiration_miss") != std::string::npos);
  CHECK(message("[tuning]\nretentions = 1ms, 10us\n").find("tuning.retentions") != std::string::npos);

  ExperimentSpec spec;
  CHECK_THROWS_AS(spec.validate(true), UsageError);
  spec.policies = {"LARS"};
  spec.baseline = "SRAM+NST";
  CHECK_THROWS_AS(spec.validate(true), UsageError);
}

TEST_CASE("run writes per-policy rows and a normalized table", "[cli]")
{
  const auto out = scratch("run");
  auto spec = small_spec(out);
  spec.policies = {"LARS", "PART+RPC"};
  spec.baseline = "LARS";
  std::ostringstream log;
  const auto result = cmd_run(spec, log);

  const auto run = table_of(out / "run.csv");
  REQUIRE(run.rows.size() == 2);
  CHECK(run.rows[0][run.column("schema")] == kRunSchema);
  CHECK(run.rows[0][run.column("policy")] == "LARS");
  CHECK(run.rows[1][run.column("policy")] == "PART+RPC");

  const auto cmp = table_of(out / "comparison.csv");
  REQUIRE(cmp.rows.size() == 2);
  CHECK(cmp.rows[0][cmp.column("energy_ratio")] == "1.000000");
  CHECK(cmp.rows[0][cmp.column("latency_ratio")] == "1.000000");
  CHECK(result.normalized.size() == 1);
  CHECK(log.str().find("cache-side") != std::string::npos);
}

TEST_CASE("unknown policy is a usage error", "[cli]")
{
  auto spec = small_spec(scratch("badpolicy"));
  spec.policies = {"LARS", "MAGIC"};
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_run(spec, log), UsageError);
}

TEST_CASE("repeated runs are byte-identical", "[cli]")
{
  std::string first_run, first_cmp;
  for (int i = 0; i < 2; ++i) {
    const auto out = scratch("det" + std::to_string(i));
    auto spec = small_spec(out);
    spec.policies = {"LARS", "PART+RPC", "LARS+NST"};
    spec.baseline = "LARS";
    spec.jobs = 1 + i * 2;
    std::ostringstream log;
    cmd_run(spec, log);
    if (i == 0) {
      first_run = slurp(out / "run.csv");
      first_cmp = slurp(out / "comparison.csv");
    } else {
      CHECK(slurp(out / "run.csv") == first_run);
      CHECK(slurp(out / "comparison.csv") == first_cmp);
    }
  }
}

TEST_CASE("sweep over both axes", "[cli]")
{
  const auto out = scratch("sweep");
  auto spec = small_spec(out);
  spec.preset_events = 20'000;
  std::ostringstream log;
  const auto rows = cmd_sweep(spec, SweepOptions{}, log);
  REQUIRE(rows.size() == 25);
  const auto table = table_of(out / "sweep.csv");
  REQUIRE(table.rows.size() == 25);
  std::size_t flagged = 0;
  std::int64_t min_fj = std::numeric_limits<std::int64_t>::max();
  for (const auto& r : rows)
    min_fj = std::min(min_fj, r.result.report.total.value);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (table.rows[i][table.column("argmin")] == "1") {
      ++flagged;
      CHECK(std::stoll(table.rows[i][table.column("energy_fj")]) == min_fj);
    }
  }
  CHECK(flagged == 1);
  CHECK(table.rows[0][table.column("retention")] == "STT-1ms");
  CHECK(table.rows[0][table.column("distance")] == "1");
  CHECK(table.rows[24][table.column("retention")] == "STT-25us");
  CHECK(table.rows[24][table.column("distance")] == "32");
}

TEST_CASE("retention sweep without prefetching has non-increasing expiration misses as retention grows", "[cli]")
{
  auto spec = small_spec(scratch("sweep-ret"));
  spec.preset = "dual-lifetime";
  SweepOptions opt;
  opt.axis = SweepAxis::Retention;
  opt.fixed_distance = std::nullopt;
  std::ostringstream log;
  const auto rows = cmd_sweep(spec, opt, log);
  REQUIRE(rows.size() == 5);
  // rows run from the longest retention to the shortest
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i - 1].result.counters.expiration_misses <= rows[i].result.counters.expiration_misses);
  CHECK(rows[0].result.counters.total_prefetches == 0);
}

TEST_CASE("empty sweep axis is a usage error", "[cli]")
{
  auto spec = small_spec(scratch("sweep-empty"));
  SweepOptions opt;
  opt.distances = std::vector<std::optional<unsigned>>{};
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_sweep(spec, opt, log), UsageError);
  opt.distances = std::vector<std::optional<unsigned>>{3};
  CHECK_THROWS_AS(cmd_sweep(spec, opt, log), UsageError);
  CHECK_THROWS_AS(parse_sweep_axis("diagonal"), UsageError);
}

TEST_CASE("report merges runs with a geometric mean row", "[cli]")
{
  auto make_run = [](const std::string& workload, std::int64_t lars, std::int64_t part) {
    csv::Table t;
    t.header = {"schema", "workload", "policy", "energy_fj", "latency_cycles"};
    t.rows = {{std::string(kRunSchema), workload, "LARS", std::to_string(lars), "100"},
              {std::string(kRunSchema), workload, "PART+RPC", std::to_string(part), "50"}};
    return t;
  };

  std::vector<csv::Table> one{make_run("a", 100, 80)};
  auto rep = build_report(one, "LARS");
  REQUIRE(rep.energy.rows.size() == 2);
  CHECK(rep.energy.header == std::vector<std::string>{"workload", "LARS", "PART+RPC"});
  CHECK(rep.energy.rows[0][2] == "0.800000");
  CHECK(rep.energy.rows[1][0] == "geomean");
  CHECK(rep.energy.rows[1][2] == "0.800000");
  CHECK(rep.latency.rows[1][2] == "0.500000");

  std::vector<csv::Table> two{make_run("a", 100, 50), make_run("b", 100, 200)};
  rep = build_report(two, "LARS");
  CHECK(rep.energy.rows[2][2] == "1.000000");

  std::vector<csv::Table> equal{make_run("a", 100, 100), make_run("b", 70, 70)};
  rep = build_report(equal, "LARS");
  for (const auto& row : rep.energy.rows)
    for (std::size_t c = 1; c < row.size(); ++c)
      CHECK(row[c] == "1.000000");

  try {
    build_report(one, "SRAM+NST");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("SRAM+NST") != std::string::npos);
  }

  auto broken = make_run("a", 1, 1);
  broken.header[3] = "energy";
  std::vector<csv::Table> bad{broken};
  try {
    build_report(bad, "LARS");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("energy_fj") != std::string::npos);
  }
}

TEST_CASE("report consumes run output", "[cli]")
{
  const auto out = scratch("roundtrip");
  auto spec = small_spec(out);
  spec.policies = {"LARS", "PART+NST"};
  std::ostringstream log;
  cmd_run(spec, log);
  const std::vector<fs::path> inputs{out / "run.csv"};
  const auto rep = cmd_report(inputs, "LARS", out, log);
  CHECK(fs::exists(out / "report_energy.csv"));
  CHECK(fs::exists(out / "report_latency.csv"));
  CHECK(rep.energy.rows.back()[1] == "1.000000");
}

TEST_CASE("command-line exit codes", "[cli]")
{
  const auto dir = scratch("exit");
  const auto d = dir.string();
  std::ofstream(dir / "small.ini") << "[tuning]\nwindow = 5000\n";
  CHECK(run_cli("run --preset scan --events 30000 -p LARS,PART+RPC -b LARS -o " + d + " -c " + (dir / "small.ini").string()) == 0);
  CHECK(run_cli("run --preset scan --events 3000 -p NOPE -o " + d) == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("run --preset scan -p LARS --jobs x") == 1);

  std::ofstream(dir / "bad.trace") << "0 0x1 0x40 R\n9 oops\n";
  CHECK(run_cli("run --trace " + (dir / "bad.trace").string() + " -p STATIC:1ms:off -o " + d) == 2);
  CHECK(run_cli("report " + (dir / "missing.csv").string() + " -b LARS -o " + d) == 2);

  const auto trace = (dir / "gen.bin").string();
  CHECK(run_cli("gen-trace --preset revisit-short --events 2000 --out " + trace + " --format binary") == 0);
  CHECK(fs::file_size(trace) % 25 == 0);
  CHECK(run_cli("run --trace " + trace + " --trace-format binary -p STATIC:25us:4,STATIC:1ms:off -b STATIC:STT-1ms:off -o " + d) == 0);
}
