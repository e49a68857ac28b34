#include "sojd/rng.hpp"

#include <cmath>
#include <numbers>

namespace sojd::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter round(const Philox4x32::Counter& c,
                                 const Philox4x32::Key& k) noexcept {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) noexcept {
  ctr = round(ctr, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    ctr = round(ctr, key);
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(a + 0x632BE59BD9B4E019ull));
  h = mix64(h ^ mix64(b + 0x85157AF5ull));
  return h;
}

Stream::Stream(std::uint64_t key) noexcept
    : key64_(key),
      key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

void Stream::refill() noexcept {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
  block_ = Philox4x32::apply(ctr, key_);
  ++counter_;
  pos_ = 0;
}

std::uint32_t Stream::next_u32() noexcept {
  if (pos_ == 4) refill();
  return block_[pos_++];
}

std::uint64_t Stream::next_u64() noexcept {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Stream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

unsigned Stream::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  const double u = uniform();
  double term = std::exp(-mean);
  double cdf = term;
  unsigned k = 0;
  while (u > cdf && term > 0.0) {
    ++k;
    term *= mean / k;
    cdf += term;
  }
  return k;
}

}  // namespace sojd::rng
