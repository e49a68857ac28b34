#include <cmath>

#include "sojd/simd/kernel_sums.hpp"

namespace sojd::simd::scalar {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

template <class Weight>
KernelSums accumulate(std::span<const double> centers, std::span<const double> a,
                      std::span<const double> b, double x, double h, Weight weight) {
  KernelSums s;
  const std::size_t n = centers.size();
  const bool has_a = !a.empty();
  const bool has_b = !b.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const double k = weight((x - centers[i]) / h);
    s.w += k;
    s.ww += k * k;
    if (has_a) s.wa += k * a[i];
    if (has_b) s.wb += k * b[i];
  }
  return s;
}

}  // namespace

KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h) {
  return accumulate(centers, a, b, x, h,
                    [](double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); });
}

KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h) {
  return accumulate(centers, a, b, x, h, [](double u) {
    const double t = std::max(1.0 - u * u, 0.0);
    return 0.9375 * t * t;
  });
}

}  // namespace sojd::simd::scalar
