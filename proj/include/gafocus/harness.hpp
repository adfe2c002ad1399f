#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gafocus/ga.hpp"
#include "gafocus/medium.hpp"
#include "gafocus/metrics.hpp"
#include "gafocus/timing.hpp"

namespace gafocus {

/// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Unreadable input or unwritable output (CLI exit code 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Malformed trace CSV; the message names the offending row.
struct TraceParseError : IoError {
  using IoError::IoError;
};

/// Everything one experiment needs. All randomness derives from `seed` and
/// the run index; there is no ambient entropy.
struct ExperimentConfig {
  // medium
  std::size_t n_outputs = 1;
  std::size_t n_modes = 1024;
  std::size_t target_channel = 0;
  std::uint64_t seed = 1;
  std::size_t baseline_samples = 1000;

  // detector
  double noise_sigma = 0.0;  // volts
  double noise_rel = 0.0;    // multiple of the baseline-mapped voltage
  unsigned adc_bits = 10;
  double adc_full_scale = 3.3;
  unsigned samples_per_measurement = 13;
  std::optional<double> gain;  // fixed volts per unit intensity
  double gain_headroom = 0.9;  // optimum intensity -> this fraction of full scale
  std::optional<double> gain_baseline_fraction;  // baseline -> this fraction instead

  // GA
  std::size_t population = 32;
  std::size_t offspring = 16;
  Replacement replacement = Replacement::replace_worst;
  MutationStyle mutation = MutationStyle::redraw;
  ScheduleKind schedule = ScheduleKind::exponential;
  double r0 = 0.06;
  double r_end = 0.012;
  double decay = 80.0;
  std::int64_t kappa_start = 2000;
  std::int64_t tau = 12;
  std::int64_t epsilon = 1 << 15;
  std::uint64_t iterations = 2000;
  std::optional<std::uint64_t> stop_at;
  unsigned workers = 1;

  // harness
  std::string profile = "virtex5";  // built-in name or profile file path
  std::vector<double> decays = {80.0, 400.0, 1000.0};
  std::size_t repeats = 10;
  std::uint64_t repeat_iterations = 500;
  double alpha = 0.0;  // decorrelation between repeats
  unsigned jobs = 1;   // concurrent runs in sweep/repeat
  bool svg = false;
  std::string out = "out";

  /// Applies one `key=value` setting. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError.
  void validate() const;

  MutationSchedule make_schedule(std::optional<double> decay_override = std::nullopt) const;
  GaConfig ga_config(std::uint64_t ga_seed, std::optional<double> decay_override = std::nullopt) const;
  HardwareProfile hardware_profile() const;
};

/// Parses the flat `key=value` format; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(write_config(c)) reproduces c.
std::string write_config(const ExperimentConfig& cfg);

/// GA randomness for run `index` of a batch: seed xor (index + 1).
std::uint64_t ga_seed_for(std::uint64_t seed, std::uint64_t index);

/// A medium with its derived measurement setup.
struct Bench {
  TransmissionMatrix medium;
  double baseline = 0.0;
  double optimum_intensity = 0.0;
  DetectorModel detector;
};

/// Computes baseline, optimum and the calibrated detector for `medium`.
Bench prepare_bench(const ExperimentConfig& cfg, TransmissionMatrix medium);
Bench prepare_bench(const ExperimentConfig& cfg);

struct RunSummary {
  double final_zeta = 0.0;
  double max_eta = 0.0;
  std::uint64_t k_star = 0;
  double f_at_k_star = 0.0;
  std::uint64_t total_measurements = 0;
  std::optional<double> model_time_at_k_star_us;
  std::optional<std::uint64_t> seed;

  nlohmann::ordered_json to_json() const;
  static RunSummary from_json(const nlohmann::json& j);

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// Self-normalised summary of a trace (N_g = last iteration unless set).
RunSummary summarize(const RunTrace& trace, std::optional<std::uint64_t> seed);

// ------------------------------------------------------------------ trace I/O

inline constexpr const char* kTraceHeader =
    "iteration,best_digitized,best_intensity,enhancement,mutation_rate_num,"
    "cum_measurements,model_time_us";

/// Locale-independent, shortest round-trip formatting of doubles.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const RunTrace& trace);
/// The baseline is recovered from the first row with nonzero enhancement.
RunTrace read_trace_csv(std::istream& in);

/// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct PlotSeries {
  std::string name;
  std::vector<double> y;  // y[i] is plotted at x = i + 1
};

/// Standalone SVG line plot.
std::string svg_line_plot(const std::string& title, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

/// Appends a timestamped line to `dir`/gafocus.log. Data files never carry
/// timestamps; this log is the only place they appear.
void append_log(const std::filesystem::path& dir, const std::string& message);

// ------------------------------------------------------------------ commands

struct RunOutcome {
  RunTrace trace;
  RunSummary summary;
  std::uint64_t ga_seed = 0;
};

/// In-memory run on a prepared bench.
RunOutcome execute_run(const ExperimentConfig& cfg, const Bench& bench, std::uint64_t ga_seed,
                       std::optional<double> decay_override = std::nullopt,
                       std::optional<std::uint64_t> iterations_override = std::nullopt);

/// One seeded run; writes trace.csv, summary.json and run_info.json.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SweepOutcome {
  std::vector<double> decays;
  std::vector<RunOutcome> runs;
  double zeta_ref = 0.0;  // sweep-wide maximum enhancement
  /// Cross-run normalised F(xi) and eta per run.
  std::vector<std::vector<double>> convergence;
  std::vector<std::vector<double>> efficiency;
};

/// One run per decay factor on the same medium and the same GA seed.
SweepOutcome sweep(const ExperimentConfig& cfg, const std::vector<double>& decays);
SweepOutcome sweep(const ExperimentConfig& cfg, const std::vector<double>& decays,
                   const std::filesystem::path& out_dir);

struct RepeatOutcome {
  std::vector<RunOutcome> runs;
  std::vector<double> baselines;
  std::vector<double> final_zeta;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double cv = 0.0;
};

/// Fresh populations (GA seed per repeat) on the same medium, optionally
/// decorrelated by cfg.alpha before every repeat after the first.
RepeatOutcome repeat(const ExperimentConfig& cfg, std::size_t n_repeats,
                     std::uint64_t iterations_per_repeat);
RepeatOutcome repeat(const ExperimentConfig& cfg, std::size_t n_repeats,
                     std::uint64_t iterations_per_repeat, const std::filesystem::path& out_dir);

/// Recomputes the summary from a trace file. Without `seed`, the seed is
/// taken from a sibling run_info.json when present.
RunSummary analyze(const std::filesystem::path& trace_path,
                   std::optional<std::uint64_t> seed = std::nullopt);

nlohmann::ordered_json timing_json(const TimingReport& r);
std::string timing_table(const TimingReport& r);
/// Built-in name or profile file path. Throws ConfigError for unknown names.
HardwareProfile resolve_profile(const std::string& name_or_path);

}  // namespace gafocus
