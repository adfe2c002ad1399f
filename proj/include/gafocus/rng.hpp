#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gafocus {

/// Packed bit sequence. Bit i lives in word i / 64 at position i % 64.
/// Bits past size() are always zero, so word-wise comparison is exact.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size, bool value = false);

  /// Parses a string of '0'/'1' characters, index 0 first.
  static BitVector from_string(std::string_view bits);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator[](std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool value);
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::size_t count() const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Zeroes the unused bits of the last word after direct word writes.
  void trim();

  std::string to_string() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

/// Binary amplitude pattern over the modulation modes: 1 = mirror on.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t n_modes, bool value = false) : bits_(n_modes, value) {}
  explicit Mask(BitVector bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value) { bits_.set(i, value); }
  std::size_t on_count() const { return bits_.count(); }

  const BitVector& bits() const { return bits_; }
  BitVector& bits() { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  BitVector bits_;
};

/// Mutation/selection probability as a numerator over 2^15, the comparison
/// width used by the hardware design.
struct FixedRate {
  static constexpr std::uint32_t kDenominator = 1u << 15;
  static constexpr unsigned kBits = 15;

  std::uint32_t numerator = 0;

  /// Rounds to the nearest representable numerator.
  static FixedRate from_fraction(double rate);
  double fraction() const { return static_cast<double>(numerator) / kDenominator; }

  friend bool operator==(FixedRate, FixedRate) = default;
};

/// Trivium keystream generator (80-bit key, 80-bit IV, 288-bit state).
///
/// Key and IV bytes follow the eSTREAM convention: state bit s_(i+1) is
/// loaded from bit i % 8 (least significant first) of byte i / 8. The
/// generator advances 64 rounds at a time; the smallest feedback lag in the
/// cipher is 66 rounds, so 64 output bits are independent of each other.
class Trivium {
 public:
  static constexpr std::size_t kKeyBytes = 10;
  static constexpr std::size_t kIvBytes = 10;
  static constexpr std::uint64_t kWarmupRounds = 4 * 288;

  /// Throws std::invalid_argument unless key and iv are exactly 10 bytes.
  Trivium(std::span<const std::uint8_t> key, std::span<const std::uint8_t> iv);

  /// Same, taking 80-bit vectors with bit i = K_(i+1).
  static Trivium from_bits(const BitVector& key, const BitVector& iv);

  /// Next 64 keystream bits; bit j of the result is the j-th bit emitted.
  std::uint64_t next_word();

  /// Total state-update rounds applied, warm-up included.
  std::uint64_t rounds() const { return rounds_; }
  bool warmed_up() const { return rounds_ >= kWarmupRounds; }

 private:
  // Each shift register is kept as the history of bits that entered it;
  // two 64-bit words cover the longest tap (111 rounds back).
  struct History {
    std::uint64_t older = 0;
    std::uint64_t recent = 0;
  };

  void advance64(std::uint64_t* keystream);

  History a_;  // 93-bit register fed by the third register's output
  History b_;  // 84-bit register
  History c_;  // 111-bit register
  std::uint64_t rounds_ = 0;
};

/// Single-owner supply of keystream bits with counted consumption.
///
/// Multi-bit integers are assembled with the first drawn bit as the least
/// significant bit.
class RandomSource {
 public:
  /// key = seed (64 bits, little endian) followed by 16 zero bits,
  /// iv = ~seed followed by 16 zero bits.
  explicit RandomSource(std::uint64_t seed);
  explicit RandomSource(Trivium cipher);

  static std::pair<std::array<std::uint8_t, 10>, std::array<std::uint8_t, 10>>
  seed_material(std::uint64_t seed);

  bool next_bit() { return next_uint(1) != 0; }

  /// nbits in [0, 64].
  std::uint64_t next_uint(unsigned nbits);

  BitVector next_bits(std::size_t n);

  /// Uniform integer in [0, bound) by rejection on the smallest power-of-two
  /// window covering the range. bound must be >= 1.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform_unit();

  /// Pair of independent standard normal variates (Box-Muller).
  std::pair<double, double> gaussian_pair();

  std::uint64_t bits_consumed() const { return consumed_; }

 private:
  Trivium cipher_;
  std::uint64_t buffer_ = 0;
  unsigned available_ = 0;
  std::uint64_t consumed_ = 0;
};

/// Uniform random mask; consumes exactly n_modes bits, bit i = mode i.
Mask random_mask(RandomSource& src, std::size_t n_modes);

/// Position i is set iff a fresh 15-bit draw is below rate.numerator.
/// Throws std::invalid_argument if the numerator exceeds 2^15.
BitVector bernoulli_select(RandomSource& src, std::size_t n, FixedRate rate);

}  // namespace gafocus
