#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace sojd {

enum class KernelKind { gaussian, quartic, custom };

/// A second-order kernel: nonnegative, symmetric, continuously
/// differentiable, integrating to one with zero first moment. Custom kernels
/// are checked against these properties at construction.
class Kernel {
 public:
  static Kernel gaussian();
  /// Quartic (biweight) kernel 15/16 (1 - u^2)^2 on [-1, 1].
  static Kernel quartic();
  /// `support_radius` is +inf for kernels with unbounded support. Throws
  /// ArgumentError when a kernel property fails.
  static Kernel custom(std::string name, std::function<double(double)> fn, double support_radius);
  /// "gaussian" or "quartic".
  static Kernel by_name(std::string_view name);

  double operator()(double u) const;

  const std::string& name() const noexcept { return name_; }
  KernelKind kind() const noexcept { return kind_; }
  double support_radius() const noexcept { return radius_; }
  /// K2 = \int K(u)^2 du, computed by quadrature once at construction.
  double k2() const noexcept { return k2_; }
  /// sup_u K(u) over a probe grid.
  double sup() const noexcept { return sup_; }

 private:
  Kernel(std::string name, KernelKind kind, std::function<double(double)> fn, double radius);

  std::string name_;
  KernelKind kind_;
  std::function<double(double)> fn_;
  double radius_;
  double k2_ = 0.0;
  double sup_ = 0.0;
};

/// \int K(u)^2 du for an arbitrary kernel function (no property checks).
double integrated_square(const std::function<double(double)>& fn, double support_radius);

/// Default bandwidth h = delta^(2/11), for 0 < delta < 1.
double default_bandwidth(double delta);

}  // namespace sojd
