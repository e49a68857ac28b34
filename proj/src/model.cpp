#include "sojd/model.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "sojd/errors.hpp"
#include "sojd/quadrature.hpp"

namespace sojd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- JumpField

JumpField::JumpField(std::string name, std::function<double(double, double)> fn)
    : JumpField(std::move(name), std::move(fn), Kind::general) {}

JumpField::JumpField(std::string name, std::function<double(double, double)> fn, Kind kind)
    : name_(std::move(name)), fn_(std::move(fn)), kind_(kind) {
  if (!fn_) throw ArgumentError("jump field '" + name_ + "' has no function");
}

JumpField JumpField::identity() {
  return {"c(x,z)=z", [](double, double z) { return z; }, Kind::identity};
}

JumpField JumpField::zero() {
  return {"c(x,z)=0", [](double, double) { return 0.0; }, Kind::zero};
}

// -------------------------------------------------------------- LevyDensity

LevyDensity::LevyDensity(Family f, double lambda, double loc, double scale)
    : family_(f), lambda_(lambda), loc_(loc), scale_(scale) {
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw ArgumentError("Levy intensity must be finite and nonnegative, got " + fmt(lambda_));
  }
  if (family_ != Family::none && !(scale_ > 0.0 && std::isfinite(scale_))) {
    throw ArgumentError("mark scale must be finite and positive, got " + fmt(scale_));
  }
  if (!std::isfinite(loc_)) throw ArgumentError("mark location must be finite");
}

LevyDensity LevyDensity::none() { return {Family::none, 0.0, 0.0, 1.0}; }

LevyDensity LevyDensity::normal(double intensity, double mean, double sd) {
  return {Family::normal, intensity, mean, sd};
}

LevyDensity LevyDensity::laplace(double intensity, double mean, double scale) {
  return {Family::laplace, intensity, mean, scale};
}

double LevyDensity::mark_density(double z) const {
  switch (family_) {
    case Family::none:
      return 0.0;
    case Family::normal: {
      const double u = (z - loc_) / scale_;
      return std::exp(-0.5 * u * u) / (scale_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case Family::laplace:
      return std::exp(-std::abs(z - loc_) / scale_) / (2.0 * scale_);
  }
  return 0.0;
}

double LevyDensity::density(double z) const {
  return lambda_ == 0.0 ? 0.0 : lambda_ * mark_density(z);
}

double LevyDensity::mark_moment(int k) const {
  if (k < 0 || k > 4) throw ArgumentError("mark_moment: k must be in 0..4");
  if (k == 0) return 1.0;
  const double m = loc_;
  const double m2 = m * m;
  switch (family_) {
    case Family::none:
      return 0.0;
    case Family::normal: {
      const double v = scale_ * scale_;
      switch (k) {
        case 1: return m;
        case 2: return m2 + v;
        case 3: return m * m2 + 3.0 * m * v;
        default: return m2 * m2 + 6.0 * m2 * v + 3.0 * v * v;
      }
    }
    case Family::laplace: {
      const double b2 = scale_ * scale_;
      switch (k) {
        case 1: return m;
        case 2: return m2 + 2.0 * b2;
        case 3: return m * m2 + 6.0 * m * b2;
        default: return m2 * m2 + 12.0 * m2 * b2 + 24.0 * b2 * b2;
      }
    }
  }
  return 0.0;
}

double LevyDensity::sample_mark(rng::Stream& s) const {
  switch (family_) {
    case Family::none:
      return 0.0;
    case Family::normal:
      return loc_ + scale_ * s.normal();
    case Family::laplace: {
      const double u = s.uniform() - 0.5;
      const double mag = -scale_ * std::log(1.0 - 2.0 * std::abs(u));
      return u < 0.0 ? loc_ - mag : loc_ + mag;
    }
  }
  return 0.0;
}

std::pair<double, double> LevyDensity::truncated_support(double tail_mass) const {
  switch (family_) {
    case Family::none:
      return {loc_, loc_};
    case Family::normal: {
      const boost::math::normal_distribution<double> nd;
      const double q = boost::math::quantile(boost::math::complement(nd, 0.5 * tail_mass));
      return {loc_ - q * scale_, loc_ + q * scale_};
    }
    case Family::laplace: {
      const double t = scale_ * std::log(1.0 / tail_mass);
      return {loc_ - t, loc_ + t};
    }
  }
  return {loc_, loc_};
}

std::string LevyDensity::describe() const {
  switch (family_) {
    case Family::none:
      return "none";
    case Family::normal:
      return fmt(lambda_) + "*Normal(" + fmt(loc_) + "," + fmt(scale_) + "^2)";
    case Family::laplace:
      return fmt(lambda_) + "*Laplace(" + fmt(loc_) + "," + fmt(scale_) + ")";
  }
  return "none";
}

// ---------------------------------------------------------------- ModelSpec

ModelSpec::ModelSpec(std::string name, ScalarField drift, ScalarField diffusion, JumpField jump,
                     LevyDensity levy, Interval range,
                     std::optional<std::function<double(double)>> stationary_density,
                     AssumptionFlags flags)
    : name_(std::move(name)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      jump_(std::move(jump)),
      levy_(levy),
      range_(range),
      stationary_(std::move(stationary_density)),
      flags_(flags) {
  if (!drift_.fn || !diffusion_.fn) throw ArgumentError("model '" + name_ + "': missing drift or diffusion");
  if (!(range_.lo < range_.hi)) throw ArgumentError("model '" + name_ + "': admissible range is empty");

  // Probe sigma >= 0 on a grid of the range (clipped to [-50, 50]).
  const double lo = std::isfinite(range_.lo) ? range_.lo : -50.0;
  const double hi = std::isfinite(range_.hi) ? range_.hi : 50.0;
  for (int i = 1; i < 200; ++i) {
    const double x = lo + (hi - lo) * i / 200.0;
    if (!range_.contains(x)) continue;
    const double s = diffusion_(x);
    if (!(s >= 0.0)) {
      throw ArgumentError("model '" + name_ + "': diffusion is negative or NaN at x = " + fmt(x));
    }
  }

  if (stationary_) {
    const auto& p = *stationary_;
    for (int i = 1; i < 200; ++i) {
      const double x = lo + (hi - lo) * i / 200.0;
      if (range_.contains(x) && !(p(x) >= 0.0)) {
        throw ArgumentError("model '" + name_ + "': stationary density is negative at x = " + fmt(x));
      }
    }
    const auto mass = quad::integrate_any(p, range_.lo, range_.hi, {.abs_tol = 1e-9});
    if (std::abs(mass.value - 1.0) > 1e-6) {
      throw ArgumentError("model '" + name_ + "': stationary density integrates to " +
                          fmt(mass.value) + ", not 1");
    }
  }
}

double ModelSpec::jump_moment_fast(int k, double x) const {
  if (levy_.intensity() == 0.0 || jump_.is_zero()) return 0.0;
  if (jump_.is_identity()) return levy_.intensity() * levy_.mark_moment(k);
  return jump_moment(*this, k, x);
}

double jump_moment(const ModelSpec& model, int k, double x) {
  if (k < 1 || k > 4) throw ArgumentError("jump_moment: k must be in {1,2,3,4}, got " + std::to_string(k));
  if (!model.range().contains(x)) {
    throw ArgumentError("jump_moment: x = " + fmt(x) + " is outside the admissible range");
  }
  const LevyDensity& levy = model.levy();
  const double lambda = levy.intensity();
  if (lambda == 0.0 || levy.family() == LevyDensity::Family::none) return 0.0;

  // Integrate c^k against the normalized mark density and scale by lambda
  // afterwards, so the result is exactly linear in lambda for lambda <= 100.
  const double tol = 1e-10 / std::max(100.0, lambda);
  auto integrand = [&](double z) {
    const double c = model.c(x, z);
    const double g = levy.mark_density(z);
    if (g == 0.0) return 0.0;
    double ck = c;
    for (int j = 1; j < k; ++j) ck *= c;
    return ck * g;
  };
  const auto [lo, hi] = levy.truncated_support();
  const double mid = levy.location();  // Laplace has a kink here.
  const auto left = quad::integrate(integrand, lo, mid, {.abs_tol = 0.5 * tol});
  const auto right = quad::integrate(integrand, mid, hi, {.abs_tol = 0.5 * tol});
  return lambda * (left.value + right.value);
}

double second_moment_target(const ModelSpec& model, double x) {
  const double s = model.sigma(x);
  return s * s + jump_moment(model, 2, x);
}

// ------------------------------------------------------------------ presets

std::map<std::string, double> preset_defaults(const std::string& name) {
  if (name == "ou-jump") return {{"theta", 1.0}, {"s", 0.5}, {"lambda", 1.0}, {"eta", 0.3}};
  if (name == "cir-jump") {
    return {{"kappa", 2.0}, {"alpha", 1.0}, {"s", 0.3}, {"lambda", 0.5}, {"eta", 0.1}};
  }
  throw ConfigError("unknown model preset '" + name + "' (expected ou-jump or cir-jump)");
}

std::string Preset::describe() const {
  std::string out = name + "(";
  bool first = true;
  for (const auto& [k, v] : params) {
    if (!first) out += ",";
    out += k + "=" + fmt(v);
    first = false;
  }
  return out + ")";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

AssumptionFlags preset_flags() {
  return {.lipschitz_growth = true, .ergodic_stationary = true, .rho_mixing = true, .bounded_moments = true};
}

// Ein(z) = \int_0^z (1 - e^{-w}) / w dw.
double ein(double z) {
  if (z > 2.0) return std::numbers::egamma + std::log(z) + boost::math::expint(1, z);
  double term = 1.0, sum = 0.0;
  for (int k = 1; k < 60; ++k) {
    term *= -z / k;
    const double add = -term / k;
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Stationary density of dX = -theta X dt + s dW + compound Poisson(lambda,
// N(0, eta^2)) by Fourier inversion of
//   log phi(u) = -s^2 u^2 / (4 theta) - Ein(eta^2 u^2 / 2) lambda / (2 theta).
// phi is even and decays like a Gaussian, so the trapezoid rule on a grid of
// step du is exact up to aliasing at period 2 pi / du.
std::function<double(double)> ou_jump_density(double theta, double s, double lambda, double eta) {
  const double sd = std::sqrt((s * s + lambda * eta * eta) / (2.0 * theta));
  const double du = 2.0 * std::numbers::pi / (100.0 * sd);
  const double u_max = std::sqrt(4.0 * theta * 45.0) / s;
  std::vector<double> phi;
  for (double u = 0.0; u <= u_max; u += du) {
    phi.push_back(std::exp(-s * s * u * u / (4.0 * theta) - lambda / (2.0 * theta) * ein(0.5 * eta * eta * u * u)));
  }
  const double half_period = 50.0 * sd;
  return [phi = std::move(phi), du, half_period](double x) {
    if (std::abs(x) > half_period) return 0.0;
    double acc = 0.5 * phi[0];
    for (std::size_t k = 1; k < phi.size(); ++k) acc += phi[k] * std::cos(static_cast<double>(k) * du * x);
    return std::max(0.0, acc * du / std::numbers::pi);
  };
}

LevyDensity preset_levy(double lambda, double eta) {
  if (lambda == 0.0) return LevyDensity::none();
  return LevyDensity::normal(lambda, 0.0, eta);
}

}  // namespace

Preset make_preset(const std::string& name, const std::map<std::string, double>& overrides) {
  auto params = preset_defaults(name);
  for (const auto& [k, v] : overrides) {
    auto it = params.find(k);
    require(it != params.end(), "preset '" + name + "' has no parameter '" + k + "'");
    require(std::isfinite(v), "preset parameter '" + k + "' must be finite");
    it->second = v;
  }
  const double s = params.at("s");
  const double lambda = params.at("lambda");
  const double eta = params.at("eta");
  require(s >= 0.0, "s must be >= 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(lambda == 0.0 || eta > 0.0, "eta must be > 0 when lambda > 0");

  if (name == "ou-jump") {
    const double theta = params.at("theta");
    require(theta > 0.0, "theta must be > 0");
    std::optional<std::function<double(double)>> pdf;
    if (lambda == 0.0 && s > 0.0) {
      const double var = s * s / (2.0 * theta);
      pdf = [var](double x) {
        return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
      };
    } else if (s > 0.0) {
      pdf = ou_jump_density(theta, s, lambda, eta);
    }
    ModelSpec model(
        "ou-jump", ScalarField{"-theta*x", [theta](double x) { return -theta * x; }, 100},
        ScalarField{"s", [s](double) { return s; }, 100}, JumpField::identity(),
        preset_levy(lambda, eta), Interval{}, pdf, preset_flags());
    return {name, params, std::move(model), 0.0};
  }

  const double kappa = params.at("kappa");
  const double alpha = params.at("alpha");
  require(kappa > 0.0, "kappa must be > 0");
  std::optional<std::function<double(double)>> pdf;
  if (lambda == 0.0 && s > 0.0) {
    const double shape = 2.0 * kappa * alpha / (s * s);
    const double rate = 2.0 * kappa / (s * s);
    if (shape >= 1.0) {
      pdf = [shape, rate](double x) {
        if (x <= 0.0) return 0.0;
        return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x -
                        std::lgamma(shape));
      };
    }
  }
  ModelSpec model(
      "cir-jump",
      ScalarField{"kappa*(alpha-x)", [kappa, alpha](double x) { return kappa * (alpha - x); }, 100},
      ScalarField{"s*sqrt(max(x,0))", [s](double x) { return s * std::sqrt(std::max(x, 0.0)); }, 0},
      JumpField::identity(), preset_levy(lambda, eta), Interval{}, pdf, preset_flags());
  return {name, params, std::move(model), alpha};
}

}  // namespace sojd
