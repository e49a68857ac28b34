#pragma once

// Kernel-weighted sums, the inner loop of every Nadaraya-Watson evaluation:
//
//   w  = sum_i K(u_i)          ww = sum_i K(u_i)^2
//   wa = sum_i K(u_i) a_i      wb = sum_i K(u_i) b_i,     u_i = (x - c_i) / h
//
// The scalar functions are the reference implementation. Vector variants
// must agree with them to rounding (see tests/unit/test_simd_equivalence.cpp)
// and are selected once at runtime from the CPU's capabilities.

#include <cstddef>
#include <span>
#include <string_view>

namespace sojd::simd {

struct KernelSums {
  double w = 0.0;
  double ww = 0.0;
  double wa = 0.0;
  double wb = 0.0;
};

enum class Backend { scalar, avx2 };

/// `a` and `b` are either empty (their sums are left at 0) or the same length
/// as `centers`.
using SumFn = KernelSums (*)(std::span<const double> centers, std::span<const double> a,
                             std::span<const double> b, double x, double h);

namespace scalar {
KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h);
KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h);
}  // namespace scalar

namespace avx2 {
KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h);
KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h);
/// exp(v) for each element, the vector routine used by gaussian_sums;
/// exposed for accuracy testing. `out` must be at least as long as `in`.
void exp_batch(std::span<const double> in, std::span<double> out);
}  // namespace avx2

/// True when the backend was compiled in and the CPU supports it.
bool available(Backend b) noexcept;

/// Backend currently used by gaussian_sums()/quartic_sums(). Defaults to the
/// widest available one; SOJD_SIMD=scalar in the environment forces scalar.
Backend active() noexcept;

/// Overrides the active backend. Throws ArgumentError if unavailable.
void force(Backend b);

std::string_view name(Backend b) noexcept;

KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h);
KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h);

}  // namespace sojd::simd
