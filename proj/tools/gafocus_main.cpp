#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gafocus/harness.hpp"

using namespace gafocus;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kInvariant = 4 };

struct CommonFlags {
  std::string config;
  std::optional<std::string> seed, out, profile, noise_sigma, noise_rel, iterations, workers, jobs;
  bool svg = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key=value config file");
  app->add_option("--seed", f.seed, "master seed (u64)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--profile", f.profile, "hardware profile name or file");
  app->add_option("--noise-sigma", f.noise_sigma, "detector noise, volts");
  app->add_option("--noise-rel", f.noise_rel, "detector noise relative to baseline voltage");
  app->add_option("--iterations", f.iterations, "GA iterations");
  app->add_option("--workers", f.workers, "fitness evaluation threads");
  app->add_option("--jobs", f.jobs, "concurrent runs");
  app->add_flag("--svg", f.svg, "also write SVG plots");
  app->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) cfg.set(key, *v);
  };
  apply("seed", f.seed);
  apply("out", f.out);
  apply("profile", f.profile);
  apply("noise_sigma", f.noise_sigma);
  apply("noise_rel", f.noise_rel);
  apply("iterations", f.iterations);
  apply("workers", f.workers);
  apply("jobs", f.jobs);
  if (f.svg) cfg.svg = true;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"GA wavefront-shaping simulator and benchmark harness"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, repeat_f;
  auto* run_cmd = app.add_subcommand("run", "one seeded GA run");
  add_common(run_cmd, run_f);

  auto* sweep_cmd = app.add_subcommand("sweep", "one run per decay factor on a shared medium");
  add_common(sweep_cmd, sweep_f);
  std::optional<std::string> decays;
  sweep_cmd->add_option("--decays", decays, "comma-separated decay factors");

  auto* repeat_cmd = app.add_subcommand("repeat", "repeated runs from fresh populations");
  add_common(repeat_cmd, repeat_f);
  std::optional<std::string> repeats, repeat_iterations, alpha;
  repeat_cmd->add_option("--repeats", repeats, "number of repeats");
  repeat_cmd->add_option("--repeat-iterations", repeat_iterations, "iterations per repeat");
  repeat_cmd->add_option("--alpha", alpha, "medium decorrelation between repeats");

  auto* analyze_cmd = app.add_subcommand("analyze", "recompute a summary from trace.csv");
  std::string trace_path;
  std::optional<std::uint64_t> analyze_seed;
  std::optional<std::string> analyze_out;
  analyze_cmd->add_option("trace", trace_path, "trace CSV")->required();
  analyze_cmd->add_option("--seed", analyze_seed, "seed to record (default: run_info.json)");
  analyze_cmd->add_option("--out", analyze_out, "write summary JSON here instead of stdout");

  auto* timing_cmd = app.add_subcommand("timing", "hardware latency model report");
  std::string timing_profile = "virtex5";
  std::uint64_t timing_iterations = 2000;
  bool derived = false, as_json = false;
  timing_cmd->add_option("--profile", timing_profile, "profile name or file");
  timing_cmd->add_option("--iterations", timing_iterations, "iterations to cost");
  timing_cmd->add_flag("--derived", derived, "ignore measured overrides");
  timing_cmd->add_flag("--json", as_json, "emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  if (*run_cmd) {
    const ExperimentConfig cfg = build_config(run_f);
    const RunOutcome r = run_experiment(cfg, cfg.out);
    std::cout << r.summary.to_json().dump(2) << '\n';
  } else if (*sweep_cmd) {
    ExperimentConfig cfg = build_config(sweep_f);
    if (decays) cfg.set("decays", *decays);
    cfg.validate();
    const SweepOutcome s = sweep(cfg, cfg.decays, cfg.out);
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
      std::cout << "D=" << format_double(s.decays[i])
                << " final_zeta=" << format_double(s.runs[i].summary.final_zeta)
                << " k_star=" << s.runs[i].summary.k_star << '\n';
    }
  } else if (*repeat_cmd) {
    ExperimentConfig cfg = build_config(repeat_f);
    if (repeats) cfg.set("repeats", *repeats);
    if (repeat_iterations) cfg.set("repeat_iterations", *repeat_iterations);
    if (alpha) cfg.set("alpha", *alpha);
    cfg.validate();
    const RepeatOutcome r = repeat(cfg, cfg.repeats, cfg.repeat_iterations, cfg.out);
    std::cout << "mean=" << format_double(r.mean) << " std=" << format_double(r.stddev)
              << " cv=" << format_double(r.cv) << '\n';
  } else if (*analyze_cmd) {
    const RunSummary s = analyze(trace_path, analyze_seed);
    const std::string text = s.to_json().dump(2) + "\n";
    if (analyze_out) {
      write_file_atomic(*analyze_out, text);
    } else {
      std::cout << text;
    }
  } else if (*timing_cmd) {
    HardwareProfile p = resolve_profile(timing_profile);
    if (derived) p = derived_mode(p);
    const TimingReport r = timing_report(p, timing_iterations);
    std::cout << (as_json ? timing_json(r).dump(2) + "\n" : timing_table(r));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
}
