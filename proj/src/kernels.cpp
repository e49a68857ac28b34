#include "sojd/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sojd/errors.hpp"
#include "sojd/quadrature.hpp"
#include "sojd/rng.hpp"

namespace sojd {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

double gaussian_fn(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

double quartic_fn(double u) {
  const double t = std::max(1.0 - u * u, 0.0);
  return 0.9375 * t * t;
}

// Integration window for kernels with unbounded support: the integrand is
// assumed negligible beyond |u| = 40.
double window(double radius) { return std::isfinite(radius) ? radius : 40.0; }

double integrate_kernel(const std::function<double(double)>& g, double radius) {
  const double r = window(radius);
  // Split at 0 so symmetric kernels with a kink at the origin converge.
  return quad::integrate(g, -r, 0.0, {.abs_tol = 1e-13}).value +
         quad::integrate(g, 0.0, r, {.abs_tol = 1e-13}).value;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void validate(const std::string& name, const std::function<double(double)>& fn, double radius) {
  auto fail = [&](const std::string& why) {
    throw ArgumentError("kernel '" + name + "' rejected: " + why);
  };
  if (!(radius > 0.0)) fail("support radius must be positive");
  const double r = window(radius);

  rng::Stream s(rng::stream_key(0x6b65726e656cull));
  for (int i = 0; i < 100; ++i) {
    const double u = (2.0 * s.uniform() - 1.0) * 1.2 * r;
    const double a = fn(u);
    const double b = fn(-u);
    if (!(a >= 0.0)) fail("negative or NaN value at u = " + fmt(u));
    if (std::abs(a - b) > 1e-14 * std::max(1.0, std::abs(a))) fail("not symmetric at u = " + fmt(u));
  }
  if (std::isfinite(radius)) {
    for (double u : {1.0001 * radius, 1.5 * radius, 3.0 * radius}) {
      if (fn(u) != 0.0) fail("nonzero outside the declared support at u = " + fmt(u));
    }
  }

  const double mass = integrate_kernel(fn, radius);
  if (std::abs(mass - 1.0) > 1e-8) fail("integral is " + fmt(mass) + ", not 1");
  const double first = integrate_kernel([&](double u) { return u * fn(u); }, radius);
  if (std::abs(first) > 1e-8) fail("first moment is " + fmt(first) + ", not 0");

  // Continuous differentiability at the support boundary: both the value and
  // the one-sided slope must vanish as u -> radius.
  if (std::isfinite(radius)) {
    const double sup = fn(0.0);
    for (double eps : {1e-4, 1e-5}) {
      const double e = eps * radius;
      const double value = fn(radius - e);
      const double slope = (fn(radius - e) - fn(radius - 2.0 * e)) / e;
      if (value > 1e-3 * sup) fail("not continuous at the support boundary");
      if (std::abs(slope) > 1e-2 * sup / radius) {
        fail("not continuously differentiable at the support boundary");
      }
    }
  }
}

}  // namespace

Kernel::Kernel(std::string name, KernelKind kind, std::function<double(double)> fn, double radius)
    : name_(std::move(name)), kind_(kind), fn_(std::move(fn)), radius_(radius) {
  k2_ = integrated_square(fn_, radius_);
  const double r = window(radius_);
  for (int i = 0; i <= 2000; ++i) sup_ = std::max(sup_, fn_(-r + 2.0 * r * i / 2000.0));
}

Kernel Kernel::gaussian() {
  return {"gaussian", KernelKind::gaussian, gaussian_fn, std::numeric_limits<double>::infinity()};
}

Kernel Kernel::quartic() { return {"quartic", KernelKind::quartic, quartic_fn, 1.0}; }

Kernel Kernel::custom(std::string name, std::function<double(double)> fn, double support_radius) {
  if (!fn) throw ArgumentError("kernel '" + name + "' has no function");
  validate(name, fn, support_radius);
  return {std::move(name), KernelKind::custom, std::move(fn), support_radius};
}

Kernel Kernel::by_name(std::string_view name) {
  if (name == "gaussian") return gaussian();
  if (name == "quartic" || name == "biweight") return quartic();
  if (name == "uniform") {
    return custom("uniform", [](double u) { return std::abs(u) <= 1.0 ? 0.5 : 0.0; }, 1.0);
  }
  throw ArgumentError("unknown kernel '" + std::string(name) + "' (expected gaussian or quartic)");
}

double Kernel::operator()(double u) const {
  switch (kind_) {
    case KernelKind::gaussian:
      return gaussian_fn(u);
    case KernelKind::quartic:
      return quartic_fn(u);
    case KernelKind::custom:
      return std::abs(u) > radius_ ? 0.0 : fn_(u);
  }
  return 0.0;
}

double integrated_square(const std::function<double(double)>& fn, double support_radius) {
  return integrate_kernel([&](double u) { const double k = fn(u); return k * k; }, support_radius);
}

double default_bandwidth(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ArgumentError("default bandwidth rule h = delta^(2/11) needs 0 < delta < 1, got delta = " +
                        fmt(delta));
  }
  return std::exp((2.0 / 11.0) * std::log(delta));
}

}  // namespace sojd
