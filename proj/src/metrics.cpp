#include "gafocus/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gafocus/ga.hpp"

namespace gafocus {

void RunTrace::validate() const {
  if (records.empty()) throw std::invalid_argument("trace has no iteration records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].iteration != i + 1) {
      throw std::invalid_argument("trace iterations must run 1, 2, ... (row " +
                                  std::to_string(i + 1) + " has iteration " +
                                  std::to_string(records[i].iteration) + ")");
    }
  }
  if (!(baseline > 0.0)) throw std::invalid_argument("trace baseline must be > 0");
  if (n_g && (*n_g < 1 || *n_g > records.back().iteration)) {
    throw std::invalid_argument("n_g outside the recorded iterations");
  }
}

double decay_ratio(const MutationSchedule& schedule, std::int64_t k) {
  return schedule.rate(k) - schedule.rate(k + 1);
}

double enhancement(double best_intensity, double baseline) {
  if (!(baseline > 0.0)) throw std::invalid_argument("enhancement: baseline must be > 0");
  return best_intensity / baseline;
}

std::vector<double> enhancement_series(const RunTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) out.push_back(r.enhancement);
  return out;
}

std::uint64_t effective_n_g(const RunTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("empty trace");
  return trace.n_g.value_or(trace.records.back().iteration);
}

std::uint64_t global_optimum_iteration(const RunTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("empty trace");
  const auto it = std::max_element(
      trace.records.begin(), trace.records.end(),
      [](const TraceRecord& a, const TraceRecord& b) { return a.enhancement < b.enhancement; });
  return it->iteration;
}

std::vector<double> normalized_convergence(const RunTrace& trace,
                                           std::optional<double> zeta_ref) {
  if (trace.records.empty()) throw std::invalid_argument("empty trace");
  const double ref = zeta_ref.value_or(
      trace.records[global_optimum_iteration(trace) - 1].enhancement);
  if (!(ref > 0.0)) throw std::invalid_argument("reference enhancement must be > 0");
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) out.push_back(r.enhancement / ref);
  return out;
}

std::vector<double> convergence_efficiency(const RunTrace& trace,
                                           std::optional<double> zeta_ref) {
  if (trace.records.empty()) throw std::invalid_argument("empty trace");
  const std::uint64_t n_g = effective_n_g(trace);
  const double ref = zeta_ref.value_or(trace.records[n_g - 1].enhancement);
  if (!(ref > 0.0)) throw std::invalid_argument("reference enhancement must be > 0");
  std::vector<double> eta;
  eta.reserve(n_g);
  for (std::uint64_t k = 1; k <= n_g; ++k) {
    const double f_xi = trace.records[k - 1].enhancement / ref;
    const double f_t = static_cast<double>(k) / static_cast<double>(n_g);
    eta.push_back(f_xi - f_t);
  }
  return eta;
}

std::uint64_t optimal_stop(const RunTrace& trace, std::optional<double> zeta_ref) {
  const auto eta = convergence_efficiency(trace, zeta_ref);
  const double best = *std::max_element(eta.begin(), eta.end());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] >= best - kEtaTieTolerance) return i + 1;
  }
  return eta.size();
}

}  // namespace gafocus
