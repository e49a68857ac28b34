#pragma once

#include <array>
#include <cstdint>

namespace sojd::rng {

/// Philox4x32-10 counter-based block function (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Derives the Philox key of a sub-stream from the master seed and up to two
/// stream coordinates (e.g. rung and replicate index). Pairwise distinct
/// coordinates give distinct keys with overwhelming probability.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a = 0,
                         std::uint64_t b = 0) noexcept;

/// Sequential view of one Philox stream: the counter walks 0, 1, 2, ... under
/// a fixed key. Copying a Stream forks it (both copies yield the same values).
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via the Box-Muller transform; the second variate of each
  /// pair is cached.
  double normal() noexcept;

  /// Poisson variate by sequential inversion. Intended for small means
  /// (per-step jump counts); cost grows linearly with the mean.
  unsigned poisson(double mean) noexcept;

  std::uint64_t key() const noexcept { return key64_; }

 private:
  void refill() noexcept;

  std::uint64_t key64_;
  Philox4x32::Key key_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sojd::rng
