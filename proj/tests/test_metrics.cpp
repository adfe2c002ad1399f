#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gafocus/ga.hpp"
#include "gafocus/metrics.hpp"

using namespace gafocus;

namespace {

RunTrace trace_of(const std::vector<double>& zeta, double baseline = 2.0) {
  RunTrace t;
  t.baseline = baseline;
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    TraceRecord r;
    r.iteration = i + 1;
    r.best_intensity = zeta[i] * baseline;
    r.enhancement = zeta[i];
    t.records.push_back(r);
  }
  return t;
}

// Saturating curve similar in shape to a fast-decay GA run.
std::vector<double> saturating(std::size_t n, double tau, double top) {
  std::vector<double> z;
  for (std::size_t k = 1; k <= n; ++k) z.push_back(top * (1.0 - std::exp(-double(k) / tau)));
  return z;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("decay ratio goldens") {
    CHECK(decay_ratio(MutationSchedule::constant(0.05), 0) == 0.0);
    CHECK(decay_ratio(MutationSchedule::constant(0.05), 1234) == 0.0);
    const auto exp80 = MutationSchedule::exponential(0.06, 0.012, 80);
    CHECK(decay_ratio(exp80, 0) == doctest::Approx(0.048 * (1 - std::exp(-1.0 / 80))));
    CHECK(decay_ratio(exp80, 0) == doctest::Approx(5.963e-4).epsilon(1e-3));
    const auto lin = MutationSchedule::linear_clamped(2000, 12, 32768, 0.012);
    for (std::int64_t k = 1; k < 134; ++k) CHECK(decay_ratio(lin, k) == 12.0 / 32768.0);
    for (std::int64_t k = 1; k < 3000; ++k) CHECK(decay_ratio(lin, k) >= 0.0);
    for (std::int64_t k = 0; k < 3000; ++k) CHECK(decay_ratio(exp80, k) >= 0.0);
  }

  TEST_CASE("enhancement") {
    CHECK(enhancement(5.0, 5.0) == 1.0);
    CHECK(enhancement(96.0, 1.0) == 96.0);
    CHECK_THROWS_AS(enhancement(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(enhancement(1.0, -2.0), std::invalid_argument);
    for (double c : {0.001, 3.0, 1e6}) CHECK(enhancement(7.0 * c, 2.0 * c) == doctest::Approx(3.5));
  }

  TEST_CASE("normalized convergence") {
    const auto t = trace_of({1, 3, 5, 5, 4});
    const auto f = normalized_convergence(t);
    CHECK(f[2] == 1.0);
    CHECK(std::count(f.begin(), f.end(), 1.0) == 2);
    CHECK(global_optimum_iteration(t) == 3);
    const auto half = normalized_convergence(t, 10.0);
    CHECK(*std::max_element(half.begin(), half.end()) == 0.5);
    CHECK_THROWS_AS(normalized_convergence(t, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(normalized_convergence(RunTrace{}), std::invalid_argument);
  }

  TEST_CASE("efficiency ends at zero and stays bounded") {
    for (double tau : {20.0, 150.0, 600.0}) {
      const auto t = trace_of(saturating(2000, tau, 150.0));
      const auto eta = convergence_efficiency(t);
      CHECK(eta.size() == 2000);
      CHECK(eta.back() == 0.0);
      for (double e : eta) {
        CHECK(e >= -1.0);
        CHECK(e <= 1.0);
      }
    }
    CHECK_THROWS_AS(convergence_efficiency(RunTrace{}), std::invalid_argument);
  }

  TEST_CASE("explicit N_g truncates the efficiency series") {
    auto t = trace_of({1, 2, 4, 8, 8, 8});
    t.n_g = 4;
    const auto eta = convergence_efficiency(t);
    CHECK(eta.size() == 4);
    CHECK(eta[3] == 0.0);
    CHECK(eta[0] == doctest::Approx(1.0 / 8 - 0.25));
  }

  TEST_CASE("optimal stop") {
    std::vector<double> ramp;
    for (int k = 1; k <= 100; ++k) ramp.push_back(0.5 * k);
    CHECK(optimal_stop(trace_of(ramp)) == 1);

    const auto fast = trace_of(saturating(2000, 100.0, 100.0));
    const auto slow = trace_of(saturating(2000, 800.0, 100.0));
    const auto k_fast = optimal_stop(fast);
    const auto k_slow = optimal_stop(slow);
    CHECK(k_fast < k_slow);
    const auto eta = convergence_efficiency(fast);
    CHECK(eta[k_fast - 1] == *std::max_element(eta.begin(), eta.end()));
  }

  TEST_CASE("optimal stop is invariant under intensity rescaling") {
    const auto z = saturating(1500, 250.0, 80.0);
    std::vector<double> scaled;
    for (double v : z) scaled.push_back(v * 37.5);
    CHECK(optimal_stop(trace_of(z)) == optimal_stop(trace_of(scaled, 7.0)));
  }

  TEST_CASE("trace validation") {
    auto t = trace_of({1, 2, 3});
    CHECK_NOTHROW(t.validate());
    t.records[1].iteration = 5;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    auto u = trace_of({1, 2});
    u.baseline = 0;
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);
    auto v = trace_of({1, 2});
    v.n_g = 3;
    CHECK_THROWS_AS(v.validate(), std::invalid_argument);
    CHECK(effective_n_g(trace_of({1, 2, 3})) == 3);
  }
}
