#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gafocus/medium.hpp"

using namespace gafocus;

namespace {

// Straight enumeration over every mask, no Gray code, no incremental field.
std::pair<std::uint64_t, double> enumerate_oracle(const TransmissionMatrix& tm) {
  const std::size_t n = tm.n_modes();
  const auto row = tm.target_row();
  std::uint64_t best_bits = 0;
  double best = -1.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    Complex sum{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      if ((bits >> i) & 1) sum += row[i];
    }
    if (std::norm(sum) > best) {
      best = std::norm(sum);
      best_bits = bits;
    }
  }
  return {best_bits, best};
}

Mask mask_of(std::uint64_t bits, std::size_t n) {
  Mask m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, (bits >> i) & 1);
  return m;
}

}  // namespace

TEST_SUITE("medium") {
  TEST_CASE("generation is deterministic and seed sensitive") {
    const auto a = TransmissionMatrix::generate(1, 1024, 0, 5);
    const auto b = TransmissionMatrix::generate(1, 1024, 0, 5);
    const auto c = TransmissionMatrix::generate(1, 1024, 0, 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
  }

  TEST_CASE("small medium matches direct regeneration from the sampler") {
    const auto tm = TransmissionMatrix::generate(1, 8, 0, 99);
    RandomSource src(99);
    for (std::size_t i = 0; i < 8; ++i) {
      const auto [re, im] = src.gaussian_pair();
      CHECK(tm(0, i) == Complex(re * std::sqrt(0.5), im * std::sqrt(0.5)));
    }
  }

  TEST_CASE("entries have unit second moment") {
    const auto tm = TransmissionMatrix::generate(64, 1024, 3, 17);
    double sum = 0.0;
    for (const auto& e : tm.entries()) sum += std::norm(e);
    const double mean = sum / double(tm.entries().size());
    CHECK(mean >= 0.95);
    CHECK(mean <= 1.05);
  }

  TEST_CASE("invalid dimensions") {
    CHECK_THROWS_AS(TransmissionMatrix::generate(0, 8, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(TransmissionMatrix::generate(1, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(TransmissionMatrix::generate(2, 8, 2, 1), std::invalid_argument);
  }

  TEST_CASE("propagation basics") {
    const auto tm = TransmissionMatrix::generate(4, 16, 1, 3);
    for (double v : propagate(tm, Mask(16))) CHECK(v == 0.0);
    for (std::size_t j : {0u, 7u, 15u}) {
      Mask m(16);
      m.set(j, true);
      const auto out = propagate(tm, m);
      for (std::size_t c = 0; c < 4; ++c) CHECK(out[c] == doctest::Approx(std::norm(tm(c, j))));
    }
    CHECK(target_intensity(tm, Mask(16, true)) == doctest::Approx(propagate(tm, Mask(16, true))[1]));
    CHECK_THROWS_AS(propagate(tm, Mask(15)), std::invalid_argument);
  }

  TEST_CASE("fields add over disjoint masks") {
    const auto tm = TransmissionMatrix::generate(8, 64, 0, 21);
    RandomSource src(2);
    for (int trial = 0; trial < 20; ++trial) {
      const Mask a = random_mask(src, 64);
      Mask b(64), both = a;
      for (std::size_t i = 0; i < 64; ++i) {
        if (!a[i] && src.next_bit()) {
          b.set(i, true);
          both.set(i, true);
        }
      }
      const auto fa = field(tm, a), fb = field(tm, b), fab = field(tm, both);
      for (std::size_t c = 0; c < 8; ++c) {
        CHECK(std::abs(fab[c] - (fa[c] + fb[c])) < 1e-12);
      }
    }
  }

  TEST_CASE("exhaustive optimum equals the enumeration oracle") {
    for (std::size_t n : {1u, 2u, 5u, 8u, 12u, 16u}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        CAPTURE(n);
        CAPTURE(seed);
        const auto tm = TransmissionMatrix::generate(1, n, 0, seed);
        const auto [bits, best] = enumerate_oracle(tm);
        const auto ex = exhaustive_optimum(tm);
        CHECK(ex.mask == mask_of(bits, n));
        CHECK(ex.intensity == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("half-plane optimum matches exhaustive search") {
    for (std::size_t n : {3u, 8u, 14u, 20u}) {
      for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const auto tm = TransmissionMatrix::generate(2, n, 1, seed);
        const auto hp = half_plane_optimum(tm);
        const auto ex = exhaustive_optimum(tm);
        CHECK(hp.intensity == doctest::Approx(ex.intensity).epsilon(1e-12));
        CHECK(target_intensity(tm, hp.mask) == doctest::Approx(hp.intensity).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("half-plane optimum dominates random masks at scale") {
    const auto tm = TransmissionMatrix::generate(1, 1024, 0, 4);
    const auto hp = half_plane_optimum(tm);
    RandomSource src(8);
    for (int i = 0; i < 200; ++i) CHECK(target_intensity(tm, random_mask(src, 1024)) <= hp.intensity);
  }

  TEST_CASE("detector quantizer examples") {
    DetectorModel det;
    RandomSource rng(1);
    det.gain = 1.0;
    CHECK(measure(det, 3.3, rng).digitized == 13299);
    CHECK(measure(det, 10.0, rng).digitized == 13299);
    CHECK(measure(det, 0.0, rng).digitized == 0);
    CHECK(measure(det, 1.65, rng).digitized == 6643);
    CHECK(rng.bits_consumed() == 0);
    CHECK_THROWS_AS(measure(det, -1.0, rng), std::invalid_argument);
  }

  TEST_CASE("noise-free measurement is monotone in intensity") {
    DetectorModel det;
    det.gain = 0.01;
    RandomSource rng(1);
    std::uint64_t prev = 0;
    for (int i = 0; i <= 4000; ++i) {
      const auto d = measure(det, i * 0.1, rng).digitized;
      CHECK(d >= prev);
      prev = d;
    }
  }

  TEST_CASE("noisy measurement averages near the clean reading") {
    DetectorModel det;
    det.noise_sigma = 0.05;
    RandomSource rng(4);
    double sum = 0.0;
    for (int i = 0; i < 400; ++i) sum += double(measure(det, 1.65, rng).digitized);
    CHECK(sum / 400.0 == doctest::Approx(13 * 511.0).epsilon(0.01));
    CHECK(rng.bits_consumed() > 0);
  }

  TEST_CASE("decorrelation") {
    const auto tm = TransmissionMatrix::generate(64, 1024, 0, 31);
    auto corr = [&](const TransmissionMatrix& other) {
      Complex num{0, 0};
      double na = 0, nb = 0;
      for (std::size_t i = 0; i < tm.entries().size(); ++i) {
        num += std::conj(tm.entries()[i]) * other.entries()[i];
        na += std::norm(tm.entries()[i]);
        nb += std::norm(other.entries()[i]);
      }
      return num.real() / std::sqrt(na * nb);
    };
    RandomSource rng(2);
    const auto same = decorrelate(tm, 0.0, rng);
    CHECK(same == tm);
    const double c1 = corr(decorrelate(tm, 1.0, rng));
    CHECK(c1 >= -0.02);
    CHECK(c1 <= 0.02);
    const auto near = decorrelate(tm, 0.1, rng);
    const double c01 = corr(near);
    CHECK(c01 >= 0.98);
    CHECK(c01 <= 1.0);
    double m2 = 0;
    for (const auto& e : near.entries()) m2 += std::norm(e);
    m2 /= double(near.entries().size());
    CHECK(m2 >= 0.95);
    CHECK(m2 <= 1.05);
    CHECK_THROWS_AS(decorrelate(tm, 1.5, rng), std::invalid_argument);
    CHECK_THROWS_AS(decorrelate(tm, -0.1, rng), std::invalid_argument);
  }

  TEST_CASE("baseline intensity") {
    const auto one = TransmissionMatrix::generate(1, 1, 0, 3);
    RandomSource rng(5);
    const double b1 = baseline_intensity(one, rng, 4000);
    // Bernoulli(1/2) times |t|^2: 3 sigma relative is 3 / sqrt(4000).
    CHECK(b1 == doctest::Approx(std::norm(one(0, 0)) / 2).epsilon(0.05));

    const auto tm = TransmissionMatrix::generate(1, 1024, 0, 12);
    double sum_sq = 0;
    Complex sum{0, 0};
    for (const auto& e : tm.target_row()) {
      sum_sq += std::norm(e);
      sum += e;
    }
    const double expected = sum_sq / 4 + std::norm(sum) / 4;
    RandomSource r1(9), r2(9);
    const double b = baseline_intensity(tm, r1, 1000);
    CHECK(b >= 0.9 * expected);
    CHECK(b <= 1.1 * expected);
    CHECK(baseline_intensity(tm, r2, 1000) == b);
    CHECK_THROWS_AS(baseline_intensity(tm, r2, 0), std::invalid_argument);
  }

  TEST_CASE("gain calibration") {
    CHECK(calibrate_gain(100.0, 3.3, 0.5) == doctest::Approx(0.0165));
    CHECK_THROWS(calibrate_gain(0.0, 3.3, 0.5));
    CHECK_THROWS(calibrate_gain(1.0, 3.3, 1.5));
  }

  TEST_CASE("snapshot round trip") {
    const auto tm = TransmissionMatrix::generate(3, 40, 2, 123);
    std::stringstream ss;
    write_snapshot(ss, MediumSnapshot::of(tm));
    const auto snap = read_snapshot(ss);
    CHECK(snap == MediumSnapshot::of(tm));
    CHECK(snap.regenerate() == tm);
    std::stringstream bad("n_modes=abc\n");
    CHECK_THROWS(read_snapshot(bad));
  }
}
