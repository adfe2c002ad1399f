#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>

#include "gafocus/harness.hpp"

using namespace gafocus;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gafocus_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_modes = 256;
  c.iterations = 60;
  c.baseline_samples = 200;
  c.seed = 5;
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(GAFOCUS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config text round trip") {
    ExperimentConfig c = small_config();
    c.replacement = Replacement::elitist_merge;
    c.schedule = ScheduleKind::linear_clamped;
    c.gain = 0.125;
    c.stop_at = 40;
    c.decays = {80, 400.5};
    c.noise_rel = 0.1;
    std::stringstream ss(write_config(c));
    const ExperimentConfig back = parse_config(ss);
    CHECK(write_config(back) == write_config(c));
  }

  TEST_CASE("config parsing errors") {
    std::stringstream unknown("bogus=1\n");
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);
    std::stringstream malformed("n_modes=12x\n");
    CHECK_THROWS_AS(parse_config(malformed), ConfigError);
    std::stringstream no_eq("n_modes\n");
    CHECK_THROWS_AS(parse_config(no_eq), ConfigError);
    std::stringstream ok("# comment\n\nseed = 0x10  # trailing\n");
    CHECK(parse_config(ok).seed == 16);

    ExperimentConfig c;
    c.target_channel = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    ExperimentConfig d;
    d.r_end = 0.5;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    ExperimentConfig e;
    e.profile = "no-such-board";
    CHECK_THROWS_AS(e.validate(), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.txt"), IoError);
  }

  TEST_CASE("seed policy") {
    CHECK(ga_seed_for(10, 0) == 11);
    CHECK(ga_seed_for(10, 1) == 8);
    CHECK(ga_seed_for(10, 2) == 9);
  }

  TEST_CASE("double formatting is shortest round trip") {
    CHECK(format_double(96.0) == "96");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  }

  TEST_CASE("trace CSV round trip is exact") {
    const auto cfg = small_config();
    const auto bench = prepare_bench(cfg);
    const auto out = execute_run(cfg, bench, ga_seed_for(cfg.seed, 0));
    std::stringstream ss;
    write_trace_csv(ss, out.trace);
    CHECK(ss.str().rfind(std::string(kTraceHeader) + "\n", 0) == 0);
    const RunTrace back = read_trace_csv(ss);
    CHECK(back.records == out.trace.records);
    CHECK(back.baseline == doctest::Approx(bench.baseline).epsilon(1e-12));
    CHECK(summarize(back, cfg.seed) == out.summary);
  }

  TEST_CASE("malformed trace rows are named") {
    auto expect_row = [](const std::string& text, const std::string& needle) {
      std::stringstream ss(text);
      try {
        read_trace_csv(ss);
        FAIL("expected a parse error");
      } catch (const TraceParseError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
      }
    };
    const std::string h = std::string(kTraceHeader) + "\n";
    expect_row("iteration,zeta\n", "row 1");
    expect_row(h + "1,5,1.5,2,100,48,\n2,5,1.5,2,100\n", "row 3");
    expect_row(h + "1,5,abc,2,100,48,\n", "row 2");
    expect_row(h + "1,5,1.5,2,100,48,\n3,5,1.5,2,100,64,\n", "row 3");
    expect_row(h, "no iteration rows");
  }

  TEST_CASE("run_experiment writes deterministic artefacts and analyze is idempotent") {
    const auto a = scratch("run_a"), b = scratch("run_b");
    auto cfg = small_config();
    cfg.svg = true;
    const auto ra = run_experiment(cfg, a);
    run_experiment(cfg, b);
    for (const char* f : {"trace.csv", "summary.json", "run_info.json", "convergence.svg", "eta.svg"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "gafocus.log"));
    CHECK(ra.trace.records.size() == 60);

    const RunSummary re = analyze(a / "trace.csv");
    CHECK(re == ra.summary);
    CHECK(re.seed == cfg.seed);
    CHECK(re.to_json().dump(2) + "\n" == slurp(a / "summary.json"));
    CHECK(RunSummary::from_json(nlohmann::json::parse(slurp(a / "summary.json"))) == ra.summary);
  }

  TEST_CASE("single-iteration smoke run") {
    auto cfg = small_config();
    cfg.iterations = 1;
    const auto dir = scratch("smoke");
    run_experiment(cfg, dir);
    std::ifstream in(dir / "trace.csv");
    CHECK(read_trace_csv(in).records.size() == 1);
  }

  TEST_CASE("linear ramp trace analyses to k* = 1") {
    const auto dir = scratch("ramp");
    std::ostringstream o;
    o << kTraceHeader << '\n';
    for (int k = 1; k <= 50; ++k) o << k << ",0," << 3 * k << ',' << 1.5 * k << ",100," << 32 + 16 * k << ",\n";
    write_file_atomic(dir / "trace.csv", o.str());
    const auto s = analyze(dir / "trace.csv", 9);
    CHECK(s.k_star == 1);
    CHECK(s.max_eta == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.seed == 9u);
    CHECK_FALSE(s.model_time_at_k_star_us.has_value());
  }

  TEST_CASE("sweep shares medium and GA seed") {
    auto cfg = small_config();
    const auto single = scratch("sweep_single"), solo = scratch("sweep_solo");
    cfg.decay = 80;
    const auto r = run_experiment(cfg, solo);
    const auto s = sweep(cfg, {80.0}, single);
    CHECK(s.runs[0].trace.records == r.trace.records);
    CHECK(slurp(single / "run0_D80" / "trace.csv") == slurp(solo / "trace.csv"));
    CHECK(fs::exists(single / "sweep.csv"));

    const auto twin = sweep(cfg, {80.0, 80.0});
    CHECK(twin.runs[0].trace.records == twin.runs[1].trace.records);

    cfg.jobs = 3;
    const auto par = sweep(cfg, {80.0, 400.0, 1000.0});
    cfg.jobs = 1;
    const auto ser = sweep(cfg, {80.0, 400.0, 1000.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(par.runs[i].trace.records == ser.runs[i].trace.records);
    double top = 0;
    for (const auto& f : ser.convergence) top = std::max(top, *std::max_element(f.begin(), f.end()));
    CHECK(top == 1.0);
    CHECK_THROWS_AS(sweep(cfg, {}), ConfigError);
  }

  TEST_CASE("sweep CSV layout") {
    const auto dir = scratch("sweep_csv");
    auto cfg = small_config();
    sweep(cfg, {80.0, 1000.0}, dir);
    std::ifstream in(dir / "sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,run0_D80_F,run0_D80_eta,run1_D1000_F,run1_D1000_eta");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 60);
  }

  TEST_CASE("repeat statistics") {
    auto cfg = small_config();
    const auto one = repeat(cfg, 1, 30);
    CHECK(one.final_zeta.size() == 1);
    CHECK(one.cv == 0.0);

    const auto dir = scratch("repeat");
    const auto r = repeat(cfg, 4, 30, dir);
    CHECK(r.final_zeta.size() == 4);
    double mean = 0;
    for (double z : r.final_zeta) mean += z / 4;
    CHECK(r.mean == doctest::Approx(mean));
    CHECK(r.cv == doctest::Approx(r.stddev / r.mean));
    CHECK(r.runs[0].trace.records != r.runs[1].trace.records);
    CHECK(fs::exists(dir / "repeats.csv"));
    CHECK(fs::exists(dir / "repeat_summary.json"));
    CHECK(fs::exists(dir / "repeat3" / "trace.csv"));
    CHECK_THROWS_AS(repeat(cfg, 0, 30), ConfigError);
  }

  TEST_CASE("decorrelated repeats match the spread of fresh media") {
    auto cfg = small_config();
    cfg.alpha = 1.0;
    const auto r = repeat(cfg, 10, 150);
    for (std::size_t i = 1; i < r.baselines.size(); ++i) CHECK(r.baselines[i] != r.baselines[0]);

    // Reference distribution: independent media from ten different seeds.
    std::vector<double> fresh;
    for (std::uint64_t s = 100; s < 110; ++s) {
      auto c = small_config();
      c.seed = s;
      fresh.push_back(execute_run(c, prepare_bench(c), ga_seed_for(s, 0), std::nullopt, 150)
                          .summary.final_zeta);
    }
    double mean = 0, ss = 0;
    for (double z : fresh) mean += z / 10;
    for (double z : fresh) ss += (z - mean) * (z - mean) / 10;
    const double sd = std::sqrt(ss);
    CHECK(std::abs(r.mean - mean) <= 3 * sd / std::sqrt(10.0) + 3 * r.stddev / std::sqrt(10.0));
    for (double z : r.final_zeta) {
      CHECK(z >= mean - 4 * sd);
      CHECK(z <= mean + 4 * sd);
    }
  }

  TEST_CASE("noise level relative to the baseline voltage") {
    auto cfg = small_config();
    cfg.noise_rel = 0.3;
    const auto b = prepare_bench(cfg);
    CHECK(b.detector.noise_sigma == doctest::Approx(0.3 * b.detector.gain * b.baseline));
    CHECK(b.detector.gain * b.optimum_intensity == doctest::Approx(0.9 * 3.3));
  }

  TEST_CASE("timing output") {
    const auto r = timing_report(resolve_profile("virtex5"), 2000);
    const auto j = timing_json(r);
    CHECK(j["per_iteration_ms"] == 8.0);
    CHECK(j["speedup_vs_pc"] == 150.0);
    CHECK(timing_table(r).find("speedup vs pc-matlab") != std::string::npos);
    CHECK_THROWS_AS(resolve_profile("spartan"), ConfigError);
  }

  TEST_CASE("atomic write leaves no temporary behind") {
    const auto dir = scratch("atomic");
    write_file_atomic(dir / "sub" / "x.txt", "hello\n");
    CHECK(slurp(dir / "sub" / "x.txt") == "hello\n");
    CHECK_FALSE(fs::exists(dir / "sub" / "x.txt.tmp"));
    CHECK_THROWS_AS(write_file_atomic("/proc/gafocus_forbidden/x", "y"), IoError);
  }

  TEST_CASE("CLI exit codes and flag precedence") {
    const auto dir = scratch("cli");
    {
      std::ofstream cfg(dir / "cfg.txt");
      cfg << "n_modes=128\niterations=5\nseed=3\nbaseline_samples=50\n";
    }
    const std::string base = "--config " + (dir / "cfg.txt").string();
    CHECK(cli("run " + base + " --out " + (dir / "a").string()) == 0);
    CHECK(cli("run " + base + " --seed 4 --out " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "b" / "trace.csv"));
    CHECK(nlohmann::json::parse(slurp(dir / "b" / "summary.json"))["seed"] == 4);
    CHECK(nlohmann::json::parse(slurp(dir / "a" / "summary.json"))["seed"] == 3);

    CHECK(cli("run " + base + " --set bogus=1") == 2);
    CHECK(cli("run --config " + (dir / "missing.txt").string()) == 3);
    CHECK(cli("run " + base + " --out /proc/gafocus_forbidden") == 3);
    CHECK(cli("timing --profile spartan") == 2);
    CHECK(cli("timing --profile ultrascale-plus --iterations 500 --json") == 0);
    CHECK(cli("analyze " + (dir / "a" / "trace.csv").string() + " --out " +
              (dir / "again.json").string()) == 0);
    CHECK(slurp(dir / "again.json") == slurp(dir / "a" / "summary.json"));
    {
      std::ofstream bad(dir / "bad.csv");
      bad << kTraceHeader << "\n1,2,3\n";
    }
    CHECK(cli("analyze " + (dir / "bad.csv").string()) == 3);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("sweep " + base + " --decays 80,400 --out " + (dir / "s").string()) == 0);
    CHECK(cli("repeat " + base + " --repeats 2 --repeat-iterations 5 --out " +
              (dir / "r").string()) == 0);
  }
}
