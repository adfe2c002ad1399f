#include "gafocus/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace gafocus {

namespace {

constexpr std::uint64_t kBaselineStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kDecorrelationStream = 0xD1B54A32D192ED03ull;

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(1u, jobs), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string trace_text(const RunTrace& trace) {
  std::ostringstream o;
  write_trace_csv(o, trace);
  return o.str();
}

void write_run_dir(const ExperimentConfig& cfg, const Bench& bench, const RunOutcome& run,
                   const std::filesystem::path& dir, std::optional<double> decay) {
  write_file_atomic(dir / "trace.csv", trace_text(run.trace));
  write_file_atomic(dir / "summary.json", dump(run.summary.to_json()));

  nlohmann::ordered_json info;
  info["seed"] = cfg.seed;
  info["ga_seed"] = run.ga_seed;
  info["baseline"] = bench.baseline;
  info["optimum_intensity"] = bench.optimum_intensity;
  info["gain"] = bench.detector.gain;
  info["noise_sigma"] = bench.detector.noise_sigma;
  info["zeta_source"] = "intensity";
  info["decay"] = decay.value_or(cfg.decay);
  info["profile"] = cfg.profile;
  if (run.trace.initial) {
    info["initial_enhancement"] = run.trace.initial->enhancement;
    info["initial_measurements"] = run.trace.initial->cum_measurements;
  }
  write_file_atomic(dir / "run_info.json", dump(info));

  if (cfg.svg) {
    write_file_atomic(dir / "convergence.svg",
                      svg_line_plot("Normalized convergence", "F",
                                    {{"F", normalized_convergence(run.trace)}}));
    write_file_atomic(dir / "eta.svg",
                      svg_line_plot("Convergence efficiency", "eta",
                                    {{"eta", convergence_efficiency(run.trace)}}));
  }
}

std::string decay_tag(double d) { return "D" + format_double(d); }

}  // namespace

std::uint64_t ga_seed_for(std::uint64_t seed, std::uint64_t index) { return seed ^ (index + 1); }

Bench prepare_bench(const ExperimentConfig& cfg, TransmissionMatrix medium) {
  Bench b{std::move(medium), 0.0, 0.0, {}};
  RandomSource baseline_rng(cfg.seed ^ kBaselineStream);
  b.baseline = baseline_intensity(b.medium, baseline_rng, cfg.baseline_samples);
  b.optimum_intensity = half_plane_optimum(b.medium).intensity;

  DetectorModel& d = b.detector;
  d.adc_bits = cfg.adc_bits;
  d.adc_full_scale = cfg.adc_full_scale;
  d.samples_per_measurement = cfg.samples_per_measurement;
  if (cfg.gain) {
    d.gain = *cfg.gain;
  } else if (cfg.gain_baseline_fraction) {
    d.gain = calibrate_gain(b.baseline, cfg.adc_full_scale, *cfg.gain_baseline_fraction);
  } else {
    d.gain = calibrate_gain(b.optimum_intensity, cfg.adc_full_scale, cfg.gain_headroom);
  }
  d.noise_sigma = cfg.noise_rel > 0.0 ? cfg.noise_rel * d.gain * b.baseline : cfg.noise_sigma;
  d.validate();
  return b;
}

Bench prepare_bench(const ExperimentConfig& cfg) {
  return prepare_bench(cfg, TransmissionMatrix::generate(cfg.n_outputs, cfg.n_modes,
                                                         cfg.target_channel, cfg.seed));
}

RunOutcome execute_run(const ExperimentConfig& cfg, const Bench& bench, std::uint64_t ga_seed,
                       std::optional<double> decay_override,
                       std::optional<std::uint64_t> iterations_override) {
  GaConfig g = cfg.ga_config(ga_seed, decay_override);
  if (iterations_override) g.max_iterations = *iterations_override;
  RunOptions opts;
  opts.baseline = bench.baseline;
  opts.profile = cfg.hardware_profile();

  RunOutcome out;
  out.ga_seed = ga_seed;
  out.trace = run(g, bench.medium, bench.detector, opts);
  out.summary = summarize(out.trace, cfg.seed);
  return out;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const Bench bench = prepare_bench(cfg);
  RunOutcome out = execute_run(cfg, bench, ga_seed_for(cfg.seed, 0));
  write_run_dir(cfg, bench, out, out_dir, std::nullopt);
  append_log(out_dir, "run seed=" + std::to_string(cfg.seed) + " iterations=" +
                          std::to_string(out.trace.records.size()));
  return out;
}

// ------------------------------------------------------------------ sweep

SweepOutcome sweep(const ExperimentConfig& cfg, const std::vector<double>& decays) {
  if (decays.empty()) throw ConfigError("sweep needs at least one decay value");
  cfg.validate();
  const Bench bench = prepare_bench(cfg);

  SweepOutcome s;
  s.decays = decays;
  s.runs.resize(decays.size());
  parallel_for(decays.size(), cfg.jobs, [&](std::size_t i) {
    s.runs[i] = execute_run(cfg, bench, ga_seed_for(cfg.seed, 0), decays[i]);
  });

  for (const auto& r : s.runs) {
    for (const auto& rec : r.trace.records) s.zeta_ref = std::max(s.zeta_ref, rec.enhancement);
  }
  for (const auto& r : s.runs) {
    s.convergence.push_back(normalized_convergence(r.trace, s.zeta_ref));
    s.efficiency.push_back(convergence_efficiency(r.trace, s.zeta_ref));
  }
  return s;
}

SweepOutcome sweep(const ExperimentConfig& cfg, const std::vector<double>& decays,
                   const std::filesystem::path& out_dir) {
  SweepOutcome s = sweep(cfg, decays);
  const Bench bench = prepare_bench(cfg);

  std::ostringstream csv;
  csv << "iteration";
  std::size_t rows = 0;
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    const std::string tag = "run" + std::to_string(i) + "_" + decay_tag(s.decays[i]);
    csv << ',' << tag << "_F," << tag << "_eta";
    rows = std::max(rows, s.convergence[i].size());
  }
  csv << '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    csv << k + 1;
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
      csv << ',';
      if (k < s.convergence[i].size()) csv << format_double(s.convergence[i][k]);
      csv << ',';
      if (k < s.efficiency[i].size()) csv << format_double(s.efficiency[i][k]);
    }
    csv << '\n';
  }
  write_file_atomic(out_dir / "sweep.csv", csv.str());

  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["zeta_ref"] = s.zeta_ref;
  j["runs"] = nlohmann::ordered_json::array();
  std::vector<PlotSeries> f_plot, eta_plot;
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    const auto& r = s.runs[i];
    const auto& eta = s.efficiency[i];
    const std::uint64_t k = optimal_stop(r.trace, s.zeta_ref);
    nlohmann::ordered_json e;
    e["decay"] = s.decays[i];
    e["ga_seed"] = r.ga_seed;
    e["dir"] = "run" + std::to_string(i) + "_" + decay_tag(s.decays[i]);
    e["final_zeta"] = r.summary.final_zeta;
    e["cross_max_eta"] = eta[k - 1];
    e["cross_k_star"] = k;
    e["summary"] = r.summary.to_json();
    j["runs"].push_back(e);
    write_run_dir(cfg, bench, r, out_dir / e["dir"].get<std::string>(), s.decays[i]);
    f_plot.push_back({decay_tag(s.decays[i]), s.convergence[i]});
    eta_plot.push_back({decay_tag(s.decays[i]), eta});
  }
  write_file_atomic(out_dir / "sweep_summary.json", dump(j));
  if (cfg.svg) {
    write_file_atomic(out_dir / "sweep_convergence.svg",
                      svg_line_plot("Normalized convergence", "F", f_plot));
    write_file_atomic(out_dir / "sweep_eta.svg",
                      svg_line_plot("Convergence efficiency", "eta", eta_plot));
  }
  append_log(out_dir, "sweep seed=" + std::to_string(cfg.seed) + " runs=" +
                          std::to_string(s.runs.size()));
  return s;
}

// ------------------------------------------------------------------ repeat

namespace {

std::vector<Bench> repeat_benches(const ExperimentConfig& cfg, std::size_t n) {
  std::vector<Bench> benches;
  benches.push_back(prepare_bench(cfg));
  if (cfg.alpha == 0.0) return benches;
  RandomSource rng(cfg.seed ^ kDecorrelationStream);
  for (std::size_t i = 1; i < n; ++i) {
    benches.push_back(prepare_bench(cfg, decorrelate(benches.back().medium, cfg.alpha, rng)));
  }
  return benches;
}

}  // namespace

RepeatOutcome repeat(const ExperimentConfig& cfg, std::size_t n_repeats,
                     std::uint64_t iterations_per_repeat) {
  if (n_repeats < 1) throw ConfigError("repeat needs n_repeats >= 1");
  if (iterations_per_repeat < 1) throw ConfigError("repeat needs iterations >= 1");
  cfg.validate();
  const auto benches = repeat_benches(cfg, n_repeats);
  auto bench_of = [&](std::size_t i) -> const Bench& {
    return benches[std::min(i, benches.size() - 1)];
  };

  RepeatOutcome r;
  r.runs.resize(n_repeats);
  parallel_for(n_repeats, cfg.jobs, [&](std::size_t i) {
    r.runs[i] = execute_run(cfg, bench_of(i), ga_seed_for(cfg.seed, i), std::nullopt,
                            iterations_per_repeat);
  });
  double sum = 0.0;
  for (std::size_t i = 0; i < n_repeats; ++i) {
    r.baselines.push_back(bench_of(i).baseline);
    r.final_zeta.push_back(r.runs[i].summary.final_zeta);
    sum += r.final_zeta.back();
  }
  r.mean = sum / double(n_repeats);
  double ss = 0.0;
  for (double z : r.final_zeta) ss += (z - r.mean) * (z - r.mean);
  r.stddev = std::sqrt(ss / double(n_repeats));
  r.cv = r.mean > 0.0 ? r.stddev / r.mean : 0.0;
  return r;
}

RepeatOutcome repeat(const ExperimentConfig& cfg, std::size_t n_repeats,
                     std::uint64_t iterations_per_repeat, const std::filesystem::path& out_dir) {
  RepeatOutcome r = repeat(cfg, n_repeats, iterations_per_repeat);
  const auto benches = repeat_benches(cfg, n_repeats);

  std::ostringstream csv;
  csv << "repeat,ga_seed,baseline,final_zeta,final_intensity,k_star\n";
  std::vector<PlotSeries> plot;
  for (std::size_t i = 0; i < n_repeats; ++i) {
    const auto& run = r.runs[i];
    csv << i << ',' << run.ga_seed << ',' << format_double(r.baselines[i]) << ','
        << format_double(r.final_zeta[i]) << ','
        << format_double(run.trace.records.back().best_intensity) << ',' << run.summary.k_star
        << '\n';
    write_run_dir(cfg, benches[std::min(i, benches.size() - 1)], run,
                  out_dir / ("repeat" + std::to_string(i)), std::nullopt);
    plot.push_back({"repeat " + std::to_string(i), enhancement_series(run.trace)});
  }
  write_file_atomic(out_dir / "repeats.csv", csv.str());

  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["n_repeats"] = n_repeats;
  j["iterations_per_repeat"] = iterations_per_repeat;
  j["alpha"] = cfg.alpha;
  j["final_zeta"] = r.final_zeta;
  j["mean"] = r.mean;
  j["std"] = r.stddev;
  j["cv"] = r.cv;
  write_file_atomic(out_dir / "repeat_summary.json", dump(j));
  if (cfg.svg) {
    write_file_atomic(out_dir / "repeats.svg", svg_line_plot("Enhancement per repeat", "zeta", plot));
  }
  append_log(out_dir, "repeat seed=" + std::to_string(cfg.seed) + " repeats=" +
                          std::to_string(n_repeats));
  return r;
}

// ------------------------------------------------------------------ analyze

RunSummary analyze(const std::filesystem::path& trace_path, std::optional<std::uint64_t> seed) {
  std::ifstream in(trace_path);
  if (!in) throw IoError("cannot read trace '" + trace_path.string() + "'");
  const RunTrace trace = read_trace_csv(in);
  if (!seed) {
    const auto info_path = trace_path.parent_path() / "run_info.json";
    if (std::ifstream info(info_path); info) {
      try {
        const auto j = nlohmann::json::parse(info);
        if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
      } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed '" + info_path.string() + "': " + e.what());
      }
    }
  }
  return summarize(trace, seed);
}

// ------------------------------------------------------------------ timing

nlohmann::ordered_json timing_json(const TimingReport& r) {
  nlohmann::ordered_json j;
  j["profile"] = r.profile;
  j["iterations"] = r.iterations;
  j["mask_generation_us"] = r.mask_generation_us;
  j["per_offspring_us"] = r.per_offspring_us;
  j["per_iteration_ms"] = r.per_iteration_ms;
  j["total_s"] = r.total_s;
  j["measurement_rate_hz"] = r.measurement_rate_hz;
  j["speedup_vs_pc"] = r.speedup_vs_pc;
  j["mask_speedup_vs_virtex5"] = r.mask_speedup_vs_virtex5;
  return j;
}

std::string timing_table(const TimingReport& r) {
  std::ostringstream o;
  auto row = [&](const char* name, double v, const char* unit) {
    o << "  " << name;
    for (std::size_t pad = std::char_traits<char>::length(name); pad < 26; ++pad) o << ' ';
    o << format_double(v) << ' ' << unit << '\n';
  };
  o << "profile " << r.profile << ", " << r.iterations << " iterations\n";
  if (r.mask_generation_us > 0.0) {
    row("mask generation", r.mask_generation_us, "us");
    row("offspring (components)", r.per_offspring_us, "us");
  }
  row("iteration", r.per_iteration_ms, "ms");
  row("total", r.total_s, "s");
  if (r.measurement_rate_hz > 0.0) row("measurement rate", r.measurement_rate_hz, "Hz");
  row("speedup vs pc-matlab", r.speedup_vs_pc, "x");
  if (r.mask_speedup_vs_virtex5 > 0.0) {
    row("mask speedup vs virtex5", r.mask_speedup_vs_virtex5, "x");
  }
  return o.str();
}

}  // namespace gafocus
