#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gafocus {

/// All model durations are carried in nanoseconds.
using Duration = std::chrono::duration<double, std::nano>;

constexpr Duration ns(double v) { return Duration(v); }
constexpr Duration us(double v) { return Duration(v * 1e3); }
constexpr Duration ms(double v) { return Duration(v * 1e6); }
constexpr Duration sec(double v) { return Duration(v * 1e9); }

constexpr double to_us(Duration d) { return d.count() / 1e3; }
constexpr double to_ms(Duration d) { return d.count() / 1e6; }
constexpr double to_s(Duration d) { return d.count() / 1e9; }

/// Latency parameters of one platform running the GA pipeline.
///
/// Per offspring the pipeline builds the mask chunk by chunk, accumulates
/// the ADC samples, then waits for ranking. DMD display overlaps the DDR
/// write-back and adds no term of its own.
struct HardwareProfile {
  std::string name;
  double core_clock_ns = 5.0;
  std::uint32_t chunk_bits = 128;
  double chunk_gen_ns = 80.0;
  std::uint64_t mask_pixels = 1024 * 768;
  /// Measured time to build one offspring mask; replaces the chunk product.
  std::optional<double> offspring_mask_us;
  double adc_accumulate_us = 31.0;
  double ranking_delay_us = 10.0;
  double init_us = 43.0;
  std::uint32_t population = 16;
  /// Measured end-to-end time per offspring, including slack the component
  /// sum does not account for. Used for the iteration time when set.
  std::optional<double> offspring_total_us;
  /// Flat per-iteration time for platforms with no pipeline breakdown.
  std::optional<double> flat_iteration_ms;

  /// Throws std::invalid_argument on non-positive durations or when
  /// chunk_bits does not divide mask_pixels.
  void validate() const;

  std::uint64_t chunks_per_mask() const { return mask_pixels / chunk_bits; }

  friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

/// "virtex5", "ultrascale-plus", "pc-matlab".
std::vector<std::string> builtin_profile_names();
/// Throws std::out_of_range listing the available names.
HardwareProfile builtin_profile(const std::string& name);

/// Drops the measured overrides so every term comes from the chunk model.
HardwareProfile derived_mode(HardwareProfile p);

/// Key-value profile file, `field=value` per line, `#` comments.
HardwareProfile read_profile(std::istream& in);
void write_profile(std::ostream& out, const HardwareProfile& p);

/// Time to build one offspring mask (override or chunk product).
Duration mask_generation_time(const HardwareProfile& p);
/// Mask generation + ADC accumulation + ranking delay.
Duration offspring_time(const HardwareProfile& p);
Duration iteration_time(const HardwareProfile& p);
Duration iteration_time(Duration per_offspring, std::uint32_t population);
/// init + iterations x iteration_time.
Duration total_time(const HardwareProfile& p, std::uint64_t iterations);

/// Ratio a / b of per-iteration (or component) times.
double speedup(Duration a, Duration b);
double speedup(const HardwareProfile& a, const HardwareProfile& b);

struct TimingReport {
  std::string profile;
  std::uint64_t iterations = 0;
  double mask_generation_us = 0.0;
  double per_offspring_us = 0.0;  // component sum
  double per_iteration_ms = 0.0;
  double total_s = 0.0;
  double measurement_rate_hz = 0.0;
  double speedup_vs_pc = 0.0;
  /// Chunk-model mask generation of virtex5 over this profile's; 0 for flat profiles.
  double mask_speedup_vs_virtex5 = 0.0;
};

TimingReport timing_report(const HardwareProfile& p, std::uint64_t iterations);

}  // namespace gafocus
