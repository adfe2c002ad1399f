#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace gafocus {

class MutationSchedule;

/// One row per GA iteration.
struct TraceRecord {
  std::uint64_t iteration = 0;
  std::uint64_t best_digitized = 0;
  double best_intensity = 0.0;  // noise-free intensity of the best-ranked mask
  double enhancement = 0.0;     // zeta_k
  std::uint32_t mutation_rate_num = 0;  // over 2^15
  std::uint64_t cum_measurements = 0;
  std::optional<double> model_time_us;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Which quantity zeta_k was computed from.
enum class ZetaSource { intensity, digitized };

struct RunTrace {
  std::vector<TraceRecord> records;  // iterations 1, 2, ...
  std::optional<TraceRecord> initial;  // state after population init (iteration 0)
  double baseline = 0.0;
  std::optional<std::uint64_t> n_g;  // explicit global-optimum iteration
  ZetaSource zeta_source = ZetaSource::intensity;

  /// Throws std::invalid_argument unless iterations run 1, 2, ... without
  /// gaps, baseline > 0 and n_g (if set) lies within the trace.
  void validate() const;
};

/// Difference of scheduled rates between index k and k + 1.
double decay_ratio(const MutationSchedule& schedule, std::int64_t k);

/// zeta = best_intensity / baseline; baseline must be > 0.
double enhancement(double best_intensity, double baseline);

std::vector<double> enhancement_series(const RunTrace& trace);

/// N_g: the explicit value if set, else the last recorded iteration.
std::uint64_t effective_n_g(const RunTrace& trace);

/// First iteration attaining the trace's maximum zeta.
std::uint64_t global_optimum_iteration(const RunTrace& trace);

/// F(xi)_k = zeta_k / zeta_ref over the whole trace. zeta_ref defaults to
/// the trace maximum, which keeps values in [0, 1].
std::vector<double> normalized_convergence(const RunTrace& trace,
                                           std::optional<double> zeta_ref = std::nullopt);

/// eta_k = zeta_k / zeta_ref - k / N_g for k = 1 .. N_g. Without an
/// external reference zeta_ref is zeta at N_g, so eta at N_g is exactly 0.
std::vector<double> convergence_efficiency(const RunTrace& trace,
                                           std::optional<double> zeta_ref = std::nullopt);

/// Iteration k maximising eta. Values within kEtaTieTolerance of the maximum
/// count as ties and resolve to the smallest k.
std::uint64_t optimal_stop(const RunTrace& trace, std::optional<double> zeta_ref = std::nullopt);

inline constexpr double kEtaTieTolerance = 1e-12;

}  // namespace gafocus
