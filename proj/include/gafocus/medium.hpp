#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gafocus/rng.hpp"

namespace gafocus {

using Complex = std::complex<double>;

/// Complex Gaussian medium mapping modulation modes to output channels.
/// Entries are i.i.d. circular complex Gaussian with unit variance and are
/// regenerated from the seed; the matrix is immutable once built.
class TransmissionMatrix {
 public:
  /// Throws std::invalid_argument on zero dimensions or target >= n_outputs.
  static TransmissionMatrix generate(std::size_t n_outputs, std::size_t n_modes,
                                     std::size_t target_channel, std::uint64_t seed);

  /// Builds a matrix from explicit row-major entries (tests, decorrelation).
  static TransmissionMatrix from_entries(std::size_t n_outputs, std::size_t n_modes,
                                         std::size_t target_channel, std::uint64_t seed,
                                         std::vector<Complex> entries);

  std::size_t n_outputs() const { return n_outputs_; }
  std::size_t n_modes() const { return n_modes_; }
  std::size_t target_channel() const { return target_; }
  std::uint64_t seed() const { return seed_; }

  const Complex& operator()(std::size_t channel, std::size_t mode) const {
    return entries_[channel * n_modes_ + mode];
  }
  std::span<const Complex> row(std::size_t channel) const {
    return {entries_.data() + channel * n_modes_, n_modes_};
  }
  std::span<const Complex> target_row() const { return row(target_); }
  std::span<const Complex> entries() const { return entries_; }

  friend bool operator==(const TransmissionMatrix&, const TransmissionMatrix&) = default;

 private:
  TransmissionMatrix() = default;

  std::size_t n_outputs_ = 0;
  std::size_t n_modes_ = 0;
  std::size_t target_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Complex> entries_;
};

/// Field at every output: sum of the row entries over modes that are on.
std::vector<Complex> field(const TransmissionMatrix& tm, const Mask& mask);
Complex target_field(const TransmissionMatrix& tm, const Mask& mask);

/// |field|^2 at every output.
std::vector<double> propagate(const TransmissionMatrix& tm, const Mask& mask);
double target_intensity(const TransmissionMatrix& tm, const Mask& mask);

/// Markov blend t' = sqrt(1 - alpha^2) t + alpha g with fresh unit-variance
/// Gaussian g. alpha must lie in [0, 1]. Always draws a full matrix of g.
TransmissionMatrix decorrelate(const TransmissionMatrix& tm, double alpha, RandomSource& rng);

/// Mean noise-free target intensity over n_samples fresh uniform masks.
double baseline_intensity(const TransmissionMatrix& tm, RandomSource& rng,
                          std::size_t n_samples);

struct OptimumResult {
  Mask mask;
  double intensity = 0.0;
};

/// Best binary mask for the target channel. The optimal on-set is always
/// the set of modes whose phasor has positive projection onto the optimal
/// field direction, so sweeping the half-plane direction over its 2N
/// breakpoints finds it in O(N log N).
OptimumResult half_plane_optimum(const TransmissionMatrix& tm);

/// Gray-code enumeration of all 2^N masks; N <= 24.
OptimumResult exhaustive_optimum(const TransmissionMatrix& tm);

// ------------------------------------------------------------------ detector

/// Photodetector + ADC front end. A measurement sums samples_per_measurement
/// conversions of the noisy detector voltage.
struct DetectorModel {
  double gain = 1.0;         // volts per unit intensity
  double noise_sigma = 0.0;  // volts, additive Gaussian per sample
  unsigned adc_bits = 10;
  double adc_full_scale = 3.3;  // volts
  unsigned samples_per_measurement = 13;  // floor(31 us / 2.3 us)

  /// Throws std::invalid_argument if any field is out of range.
  void validate() const;

  std::uint32_t max_code() const { return (std::uint32_t{1} << adc_bits) - 1; }
  std::uint64_t max_digitized() const {
    return std::uint64_t{samples_per_measurement} * max_code();
  }
  /// Floor quantizer on the clamped voltage.
  std::uint32_t quantize(double volts) const;
};

struct Measurement {
  double raw_intensity = 0.0;
  std::uint64_t digitized = 0;
  std::uint64_t iteration_index = 0;
};

/// No random bits are drawn when noise_sigma is zero.
Measurement measure(const DetectorModel& det, double intensity, RandomSource& rng,
                    std::uint64_t iteration_index = 0);

/// Gain that maps `reference_intensity` to `fraction` of the ADC full scale.
double calibrate_gain(double reference_intensity, double full_scale, double fraction);

// ------------------------------------------------------------------ snapshot

/// Medium identity; the matrix itself is regenerated from the seed.
struct MediumSnapshot {
  std::size_t n_outputs = 1;
  std::size_t n_modes = 1024;
  std::size_t target_channel = 0;
  std::uint64_t seed = 0;

  static MediumSnapshot of(const TransmissionMatrix& tm);
  TransmissionMatrix regenerate() const;

  friend bool operator==(const MediumSnapshot&, const MediumSnapshot&) = default;
};

/// Text record, one `key=value` per line.
void write_snapshot(std::ostream& out, const MediumSnapshot& snap);
/// Throws std::runtime_error on missing or malformed keys.
MediumSnapshot read_snapshot(std::istream& in);

}  // namespace gafocus
