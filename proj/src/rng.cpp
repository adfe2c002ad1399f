#include "gafocus/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gafocus {

namespace {

constexpr std::uint64_t low_mask(unsigned nbits) {
  return nbits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << nbits) - 1;
}

}  // namespace

// ---------------------------------------------------------------- BitVector

BitVector::BitVector(std::size_t size, bool value)
    : size_(size), words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  trim();
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      out.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("bit string may only contain '0' and '1'");
    }
  }
  return out;
}

void BitVector::set(std::size_t i, bool value) {
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= bit;
  } else {
    words_[i >> 6] &= ~bit;
  }
}

std::size_t BitVector::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void BitVector::trim() {
  if (size_ % 64 != 0) words_.back() &= low_mask(size_ % 64);
}

std::string BitVector::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if ((*this)[i]) s[i] = '1';
  }
  return s;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming_distance: length mismatch");
  }
  std::size_t n = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    n += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  }
  return n;
}

// ---------------------------------------------------------------- FixedRate

FixedRate FixedRate::from_fraction(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("rate must lie in [0, 1]");
  }
  return FixedRate{static_cast<std::uint32_t>(std::lround(rate * kDenominator))};
}

// ---------------------------------------------------------------- Trivium

namespace {

// 64 consecutive values of the register bit at index `lag` (1-based), one
// per upcoming round. Valid for 64 < lag <= 128.
inline std::uint64_t tap(std::uint64_t older, std::uint64_t recent, unsigned lag) {
  const unsigned s = 128 - lag;
  return (older >> s) | (recent << (64 - s));
}

}  // namespace

Trivium::Trivium(std::span<const std::uint8_t> key, std::span<const std::uint8_t> iv) {
  if (key.size() != kKeyBytes || iv.size() != kIvBytes) {
    throw std::invalid_argument("Trivium key and IV must be exactly 80 bits");
  }
  // Register index i (1-based) sits at history bit 128 - i.
  auto load = [](History& h, unsigned index, bool bit) {
    if (!bit) return;
    const unsigned pos = 128 - index;
    if (pos >= 64) {
      h.recent |= std::uint64_t{1} << (pos - 64);
    } else {
      h.older |= std::uint64_t{1} << pos;
    }
  };
  for (unsigned i = 0; i < 80; ++i) {
    load(a_, i + 1, (key[i / 8] >> (i % 8)) & 1u);
    load(b_, i + 1, (iv[i / 8] >> (i % 8)) & 1u);
  }
  load(c_, 109, true);
  load(c_, 110, true);
  load(c_, 111, true);

  for (std::uint64_t r = 0; r < kWarmupRounds; r += 64) advance64(nullptr);
}

Trivium Trivium::from_bits(const BitVector& key, const BitVector& iv) {
  if (key.size() != 80 || iv.size() != 80) {
    throw std::invalid_argument("Trivium key and IV must be exactly 80 bits");
  }
  std::array<std::uint8_t, kKeyBytes> k{};
  std::array<std::uint8_t, kIvBytes> v{};
  for (std::size_t i = 0; i < 80; ++i) {
    if (key[i]) k[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    if (iv[i]) v[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return Trivium(k, v);
}

void Trivium::advance64(std::uint64_t* keystream) {
  const auto a = [this](unsigned i) { return tap(a_.older, a_.recent, i); };
  const auto b = [this](unsigned i) { return tap(b_.older, b_.recent, i); };
  const auto c = [this](unsigned i) { return tap(c_.older, c_.recent, i); };

  const std::uint64_t t1 = a(66) ^ a(93);
  const std::uint64_t t2 = b(69) ^ b(84);
  const std::uint64_t t3 = c(66) ^ c(111);
  if (keystream != nullptr) *keystream = t1 ^ t2 ^ t3;

  const std::uint64_t into_b = t1 ^ (a(91) & a(92)) ^ b(78);
  const std::uint64_t into_c = t2 ^ (b(82) & b(83)) ^ c(87);
  const std::uint64_t into_a = t3 ^ (c(109) & c(110)) ^ a(69);

  a_ = {a_.recent, into_a};
  b_ = {b_.recent, into_b};
  c_ = {c_.recent, into_c};
  rounds_ += 64;
}

std::uint64_t Trivium::next_word() {
  std::uint64_t z = 0;
  advance64(&z);
  return z;
}

// ---------------------------------------------------------------- RandomSource

std::pair<std::array<std::uint8_t, 10>, std::array<std::uint8_t, 10>>
RandomSource::seed_material(std::uint64_t seed) {
  std::array<std::uint8_t, 10> key{};
  std::array<std::uint8_t, 10> iv{};
  for (unsigned i = 0; i < 8; ++i) {
    key[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    iv[i] = static_cast<std::uint8_t>(~seed >> (8 * i));
  }
  return {key, iv};
}

RandomSource::RandomSource(std::uint64_t seed)
    : cipher_([seed] {
        auto [key, iv] = seed_material(seed);
        return Trivium(key, iv);
      }()) {}

RandomSource::RandomSource(Trivium cipher) : cipher_(std::move(cipher)) {}

std::uint64_t RandomSource::next_uint(unsigned nbits) {
  if (nbits > 64) throw std::invalid_argument("next_uint: at most 64 bits");
  if (nbits == 0) return 0;
  consumed_ += nbits;
  if (available_ >= nbits) {
    const std::uint64_t out = buffer_ & low_mask(nbits);
    buffer_ = nbits == 64 ? 0 : buffer_ >> nbits;
    available_ -= nbits;
    return out;
  }
  std::uint64_t out = buffer_;
  const unsigned have = available_;
  const unsigned need = nbits - have;
  const std::uint64_t fresh = cipher_.next_word();
  out |= (fresh & low_mask(need)) << have;
  buffer_ = need == 64 ? 0 : fresh >> need;
  available_ = 64 - need;
  return out;
}

BitVector RandomSource::next_bits(std::size_t n) {
  BitVector out(n);
  auto words = out.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::size_t remaining = n - 64 * w;
    words[w] = next_uint(remaining >= 64 ? 64u : static_cast<unsigned>(remaining));
  }
  return out;
}

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be >= 1");
  const unsigned width = static_cast<unsigned>(std::bit_width(bound - 1));
  for (;;) {
    const std::uint64_t x = next_uint(width);
    if (x < bound) return x;
  }
}

double RandomSource::uniform_unit() {
  return static_cast<double>(next_uint(53)) * 0x1p-53;
}

std::pair<double, double> RandomSource::gaussian_pair() {
  const double u1 = static_cast<double>(next_uint(53) + 1) * 0x1p-53;  // (0, 1]
  const double u2 = uniform_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

// ---------------------------------------------------------------- samplers

Mask random_mask(RandomSource& src, std::size_t n_modes) {
  if (n_modes == 0) throw std::invalid_argument("random_mask: n_modes must be >= 1");
  return Mask(src.next_bits(n_modes));
}

BitVector bernoulli_select(RandomSource& src, std::size_t n, FixedRate rate) {
  if (rate.numerator > FixedRate::kDenominator) {
    throw std::invalid_argument("bernoulli_select: rate numerator exceeds 2^15");
  }
  BitVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (src.next_uint(FixedRate::kBits) < rate.numerator) out.set(i, true);
  }
  return out;
}

}  // namespace gafocus
