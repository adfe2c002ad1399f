#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gafocus/medium.hpp"
#include "gafocus/metrics.hpp"
#include "gafocus/rng.hpp"
#include "gafocus/timing.hpp"

namespace gafocus {

/// R = (R0 - R_end) exp(-k / D) + R_end, k >= 0.
double rate_exponential(std::int64_t k, double r0, double r_end, double decay);

/// R = (kappa_start - (k - 1) tau) / epsilon while that exceeds R_end, else
/// R_end. The numerator is evaluated in integers, k >= 1.
double rate_linear_clamped(std::int64_t k, std::int64_t kappa_start, std::int64_t tau,
                           std::int64_t epsilon, double r_end);

enum class ScheduleKind { exponential, linear_clamped, constant };

/// Mutation-rate rule. Exponential and constant schedules are indexed from
/// k = 0, the linear schedule from k = 1; GA iteration 1 always maps to the
/// first index so every schedule starts at R0.
class MutationSchedule {
 public:
  static MutationSchedule exponential(double r0, double r_end, double decay);
  static MutationSchedule linear_clamped(std::int64_t kappa_start, std::int64_t tau,
                                         std::int64_t epsilon, double r_end);
  static MutationSchedule constant(double rate);

  ScheduleKind kind() const { return kind_; }
  double r0() const { return r0_; }
  double r_end() const { return r_end_; }
  double decay() const { return decay_; }
  std::int64_t kappa_start() const { return kappa_start_; }
  std::int64_t tau() const { return tau_; }
  std::int64_t epsilon() const { return epsilon_; }

  std::int64_t first_index() const { return kind_ == ScheduleKind::linear_clamped ? 1 : 0; }

  /// Rate at the schedule's native index k (k >= first_index()).
  double rate(std::int64_t k) const;
  /// Rate used during GA iteration `iteration` (1-based).
  double rate_at_iteration(std::uint64_t iteration) const;
  /// The same, rounded to the 2^15 fixed-point grid the GA draws against.
  FixedRate fixed_rate_at_iteration(std::uint64_t iteration) const;

 private:
  MutationSchedule() = default;

  ScheduleKind kind_ = ScheduleKind::constant;
  double r0_ = 0.0;
  double r_end_ = 0.0;
  double decay_ = 1.0;
  std::int64_t kappa_start_ = 0;
  std::int64_t tau_ = 0;
  std::int64_t epsilon_ = FixedRate::kDenominator;
};

enum class Replacement {
  replace_worst,  // drop the worst M parents, insert all M offspring
  elitist_merge,  // keep the best P of parents and offspring
};

enum class MutationStyle {
  redraw,  // selected modes become fair coins
  flip,    // selected modes are inverted
};

struct GaConfig {
  std::size_t population_size = 32;
  std::size_t offspring_per_iteration = 16;
  std::size_t n_modes = 1024;
  MutationSchedule schedule = MutationSchedule::exponential(0.06, 0.012, 80.0);
  Replacement replacement = Replacement::replace_worst;
  MutationStyle mutation = MutationStyle::redraw;
  std::uint64_t max_iterations = 2000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> stop_at;  // early stop iteration
  unsigned workers = 1;  // fitness-evaluation threads

  /// Throws std::invalid_argument.
  void validate() const;
};

struct Individual {
  Mask mask;
  std::optional<std::uint64_t> fitness;  // digitized reading taken when displayed
  double intensity = 0.0;  // noise-free, diagnostics only
  std::uint32_t age = 0;
};

/// Members sorted by fitness, best first; equal fitness keeps prior order.
struct Population {
  std::vector<Individual> members;
  std::size_t capacity = 0;

  const Individual& best() const { return members.front(); }
  std::size_t size() const { return members.size(); }
};

/// Stable sort by fitness, descending.
void rank(std::vector<Individual>& members);

/// Rank-weighted draw of two distinct members: rank r (1 = best) has
/// weight P - r + 1 and the second draw excludes the first. Returns member
/// indices. Throws std::logic_error for populations smaller than 2.
std::pair<std::size_t, std::size_t> select_parents(const Population& pop, RandomSource& rng);

/// Uniform template T; offspring bit i is a_i where T_i = 1, else b_i.
Mask crossover(const Mask& a, const Mask& b, RandomSource& rng);

/// Selects each mode with probability `rate` via bernoulli_select, then
/// re-draws (or flips) the selected modes in increasing index order.
Mask mutate(const Mask& m, FixedRate rate, RandomSource& rng,
            MutationStyle style = MutationStyle::redraw);
Mask mutate(const Mask& m, double rate, RandomSource& rng,
            MutationStyle style = MutationStyle::redraw);

/// Noise-free target intensities of `masks`, split across `workers` threads.
/// The result does not depend on the worker count.
std::vector<double> evaluate_intensities(const TransmissionMatrix& tm,
                                         const std::vector<const Mask*>& masks,
                                         unsigned workers);

struct IterationResult {
  std::uint64_t iteration = 0;
  std::uint64_t best_fitness = 0;
  double best_intensity = 0.0;
  FixedRate rate;
  std::uint64_t measurements = 0;  // cumulative
};

/// Population lifecycle on a fixed medium.
///
/// Each iteration draws all random material for its offspring serially
/// (parents, crossover template, mutation sites, re-drawn bits, in offspring
/// order), evaluates intensities, possibly concurrently, then measures and
/// commits in offspring order. Traces are therefore identical for any
/// worker count.
class GaEngine {
 public:
  /// Validates the config and measures the initial population.
  GaEngine(GaConfig cfg, const TransmissionMatrix& medium, DetectorModel detector);

  IterationResult step();

  const Population& population() const { return pop_; }
  const GaConfig& config() const { return cfg_; }
  std::uint64_t iteration() const { return iteration_; }
  std::uint64_t measurements() const { return measurements_; }
  std::uint64_t bits_consumed() const { return rng_.bits_consumed(); }

 private:
  std::vector<Individual> measure_batch(std::vector<Mask> masks);

  GaConfig cfg_;
  const TransmissionMatrix* medium_;
  DetectorModel detector_;
  RandomSource rng_;
  Population pop_;
  std::uint64_t iteration_ = 0;
  std::uint64_t measurements_ = 0;
};

struct RunOptions {
  double baseline = 1.0;  // noise-free mean speckle intensity
  std::optional<HardwareProfile> profile;  // fills model_time_us
};

/// Runs min(max_iterations, stop_at) iterations and records one row each,
/// plus the post-initialization state in RunTrace::initial.
RunTrace run(const GaConfig& cfg, const TransmissionMatrix& medium,
             const DetectorModel& detector, const RunOptions& options);

}  // namespace gafocus
