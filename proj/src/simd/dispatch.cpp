#include <atomic>
#include <cstdlib>
#include <string>

#include "sojd/errors.hpp"
#include "sojd/simd/kernel_sums.hpp"

namespace sojd::simd {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(SOJD_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("SOJD_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

bool available(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Backend active() noexcept { return current().load(std::memory_order_relaxed); }

void force(Backend b) {
  if (!available(b)) throw ArgumentError("SIMD backend '" + std::string(name(b)) + "' is not available");
  current().store(b, std::memory_order_relaxed);
}

std::string_view name(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h) {
#if defined(SOJD_HAVE_AVX2)
  if (active() == Backend::avx2) return avx2::gaussian_sums(centers, a, b, x, h);
#endif
  return scalar::gaussian_sums(centers, a, b, x, h);
}

KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h) {
#if defined(SOJD_HAVE_AVX2)
  if (active() == Backend::avx2) return avx2::quartic_sums(centers, a, b, x, h);
#endif
  return scalar::quartic_sums(centers, a, b, x, h);
}

}  // namespace sojd::simd
