#include "gafocus/medium.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gafocus {

namespace {

constexpr double kHalfVarianceScale = std::numbers::sqrt2 / 2.0;

// Visits the indices of set bits in increasing order.
template <typename Fn>
void for_each_on(const Mask& mask, Fn&& fn) {
  const auto words = mask.bits().words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits != 0) {
      const auto bit = static_cast<std::size_t>(std::countr_zero(bits));
      fn(64 * w + bit);
      bits &= bits - 1;
    }
  }
}

void check_mask(const TransmissionMatrix& tm, const Mask& mask) {
  if (mask.size() != tm.n_modes()) {
    throw std::invalid_argument("mask length " + std::to_string(mask.size()) +
                                " does not match medium n_modes " +
                                std::to_string(tm.n_modes()));
  }
}

Complex row_sum(std::span<const Complex> row, const Mask& mask) {
  Complex sum{0.0, 0.0};
  for_each_on(mask, [&](std::size_t i) { sum += row[i]; });
  return sum;
}

}  // namespace

// ---------------------------------------------------------------- medium

TransmissionMatrix TransmissionMatrix::generate(std::size_t n_outputs, std::size_t n_modes,
                                                std::size_t target_channel,
                                                std::uint64_t seed) {
  if (n_outputs == 0 || n_modes == 0) {
    throw std::invalid_argument("medium dimensions must be >= 1");
  }
  RandomSource rng(seed);
  std::vector<Complex> entries(n_outputs * n_modes);
  for (auto& e : entries) {
    const auto [re, im] = rng.gaussian_pair();
    e = {re * kHalfVarianceScale, im * kHalfVarianceScale};
  }
  return from_entries(n_outputs, n_modes, target_channel, seed, std::move(entries));
}

TransmissionMatrix TransmissionMatrix::from_entries(std::size_t n_outputs,
                                                    std::size_t n_modes,
                                                    std::size_t target_channel,
                                                    std::uint64_t seed,
                                                    std::vector<Complex> entries) {
  if (n_outputs == 0 || n_modes == 0) {
    throw std::invalid_argument("medium dimensions must be >= 1");
  }
  if (target_channel >= n_outputs) {
    throw std::invalid_argument("target channel " + std::to_string(target_channel) +
                                " out of range for " + std::to_string(n_outputs) +
                                " outputs");
  }
  if (entries.size() != n_outputs * n_modes) {
    throw std::invalid_argument("entry count does not match medium shape");
  }
  TransmissionMatrix tm;
  tm.n_outputs_ = n_outputs;
  tm.n_modes_ = n_modes;
  tm.target_ = target_channel;
  tm.seed_ = seed;
  tm.entries_ = std::move(entries);
  return tm;
}

std::vector<Complex> field(const TransmissionMatrix& tm, const Mask& mask) {
  check_mask(tm, mask);
  std::vector<Complex> out(tm.n_outputs());
  for (std::size_t c = 0; c < tm.n_outputs(); ++c) out[c] = row_sum(tm.row(c), mask);
  return out;
}

Complex target_field(const TransmissionMatrix& tm, const Mask& mask) {
  check_mask(tm, mask);
  return row_sum(tm.target_row(), mask);
}

std::vector<double> propagate(const TransmissionMatrix& tm, const Mask& mask) {
  const auto f = field(tm, mask);
  std::vector<double> out(f.size());
  std::transform(f.begin(), f.end(), out.begin(), [](Complex z) { return std::norm(z); });
  return out;
}

double target_intensity(const TransmissionMatrix& tm, const Mask& mask) {
  return std::norm(target_field(tm, mask));
}

TransmissionMatrix decorrelate(const TransmissionMatrix& tm, double alpha, RandomSource& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("decorrelation alpha must lie in [0, 1]");
  }
  const double keep = std::sqrt(1.0 - alpha * alpha);
  std::vector<Complex> entries(tm.entries().begin(), tm.entries().end());
  for (auto& e : entries) {
    const auto [re, im] = rng.gaussian_pair();
    const Complex fresh{re * kHalfVarianceScale, im * kHalfVarianceScale};
    e = keep * e + alpha * fresh;
  }
  // The result keeps the parent seed as lineage; it is not regenerable from it.
  return TransmissionMatrix::from_entries(tm.n_outputs(), tm.n_modes(), tm.target_channel(),
                                          tm.seed(), std::move(entries));
}

double baseline_intensity(const TransmissionMatrix& tm, RandomSource& rng,
                          std::size_t n_samples) {
  if (n_samples == 0) throw std::invalid_argument("baseline needs at least one sample");
  double sum = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    sum += target_intensity(tm, random_mask(rng, tm.n_modes()));
  }
  return sum / static_cast<double>(n_samples);
}

// ---------------------------------------------------------------- optimum

OptimumResult half_plane_optimum(const TransmissionMatrix& tm) {
  const auto row = tm.target_row();
  const std::size_t n = row.size();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kHalfPi = std::numbers::pi / 2.0;

  auto wrap = [](double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
  };

  // Mode i is on for directions theta in (phi_i - pi/2, phi_i + pi/2).
  struct Event {
    double angle;
    std::size_t mode;
    bool enters;
  };
  std::vector<Event> events;
  events.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (row[i] == Complex{}) continue;
    const double phi = std::arg(row[i]);
    events.push_back({wrap(phi - kHalfPi), i, true});
    events.push_back({wrap(phi + kHalfPi), i, false});
  }

  OptimumResult best{Mask(n), 0.0};
  if (events.empty()) return best;

  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    return x.angle < y.angle || (x.angle == y.angle && x.mode < y.mode);
  });

  auto set_for = [&](double theta) {
    Mask m(n);
    const Complex dir = std::polar(1.0, -theta);
    for (std::size_t i = 0; i < n; ++i) {
      if ((row[i] * dir).real() > 0.0) m.set(i, true);
    }
    return m;
  };

  // Start inside the interval that wraps around 2*pi, then walk the events.
  const double start = 0.5 * (events.back().angle + events.front().angle + kTwoPi);
  Mask current = set_for(start);
  Complex sum = row_sum(row, current);

  double best_approx = -1.0;
  double best_theta = start;
  auto consider = [&](double theta) {
    const double value = std::norm(sum);
    if (value > best_approx) {
      best_approx = value;
      best_theta = theta;
    }
  };
  consider(start);

  for (std::size_t e = 0; e < events.size(); ++e) {
    const Event& ev = events[e];
    sum += ev.enters ? row[ev.mode] : -row[ev.mode];
    const bool last_at_angle = e + 1 == events.size() || events[e + 1].angle != ev.angle;
    if (!last_at_angle) continue;
    const double next = e + 1 == events.size() ? events.front().angle + kTwoPi
                                               : events[e + 1].angle;
    consider(0.5 * (ev.angle + next));
  }

  best.mask = set_for(best_theta);
  best.intensity = target_intensity(tm, best.mask);
  return best;
}

OptimumResult exhaustive_optimum(const TransmissionMatrix& tm) {
  const std::size_t n = tm.n_modes();
  if (n > 24) throw std::invalid_argument("exhaustive search limited to 24 modes");
  const auto row = tm.target_row();

  // Incremental Gray-code sums screen candidates; anything close to the
  // running best is re-evaluated directly so the result is exact.
  constexpr double kScreen = 1e-9;
  Mask mask(n);
  Complex sum{};
  OptimumResult best{mask, 0.0};
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(g));
    const bool on = !mask[bit];
    mask.set(bit, on);
    sum += on ? row[bit] : -row[bit];
    if (std::norm(sum) >= best.intensity * (1.0 - kScreen)) {
      const double exact = target_intensity(tm, mask);
      if (exact > best.intensity) best = {mask, exact};
    }
  }
  return best;
}

// ---------------------------------------------------------------- detector

void DetectorModel::validate() const {
  if (adc_bits < 1 || adc_bits > 31) throw std::invalid_argument("adc_bits must be in [1, 31]");
  if (!(adc_full_scale > 0.0)) throw std::invalid_argument("adc_full_scale must be > 0");
  if (samples_per_measurement < 1) {
    throw std::invalid_argument("samples_per_measurement must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(gain >= 0.0) || !std::isfinite(gain)) throw std::invalid_argument("gain must be finite and >= 0");
}

std::uint32_t DetectorModel::quantize(double volts) const {
  const double v = std::clamp(volts, 0.0, adc_full_scale);
  return static_cast<std::uint32_t>(std::floor(v / adc_full_scale * max_code()));
}

Measurement measure(const DetectorModel& det, double intensity, RandomSource& rng,
                    std::uint64_t iteration_index) {
  det.validate();
  if (!(intensity >= 0.0)) throw std::invalid_argument("intensity must be >= 0");
  const double volts = det.gain * intensity;
  std::uint64_t acc = 0;
  if (det.noise_sigma == 0.0) {
    acc = std::uint64_t{det.samples_per_measurement} * det.quantize(volts);
  } else {
    for (unsigned s = 0; s < det.samples_per_measurement; s += 2) {
      const auto [g0, g1] = rng.gaussian_pair();
      acc += det.quantize(volts + det.noise_sigma * g0);
      if (s + 1 < det.samples_per_measurement) acc += det.quantize(volts + det.noise_sigma * g1);
    }
  }
  return {intensity, acc, iteration_index};
}

double calibrate_gain(double reference_intensity, double full_scale, double fraction) {
  if (!(reference_intensity > 0.0)) throw std::invalid_argument("reference intensity must be > 0");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0, 1]");
  return fraction * full_scale / reference_intensity;
}

// ---------------------------------------------------------------- snapshot

MediumSnapshot MediumSnapshot::of(const TransmissionMatrix& tm) {
  return {tm.n_outputs(), tm.n_modes(), tm.target_channel(), tm.seed()};
}

TransmissionMatrix MediumSnapshot::regenerate() const {
  return TransmissionMatrix::generate(n_outputs, n_modes, target_channel, seed);
}

void write_snapshot(std::ostream& out, const MediumSnapshot& snap) {
  out << "n_outputs=" << snap.n_outputs << '\n'
      << "n_modes=" << snap.n_modes << '\n'
      << "target_channel=" << snap.target_channel << '\n'
      << "seed=" << snap.seed << '\n';
}

MediumSnapshot read_snapshot(std::istream& in) {
  std::map<std::string, std::uint64_t> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      std::size_t used = 0;
      values[key] = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::runtime_error("snapshot line " + std::to_string(line_no) +
                               ": bad integer for " + key);
    }
  }
  auto get = [&](const char* key) {
    const auto it = values.find(key);
    if (it == values.end()) throw std::runtime_error(std::string("snapshot missing ") + key);
    return it->second;
  };
  MediumSnapshot snap;
  snap.n_outputs = get("n_outputs");
  snap.n_modes = get("n_modes");
  snap.target_channel = get("target_channel");
  snap.seed = get("seed");
  return snap;
}

}  // namespace gafocus
