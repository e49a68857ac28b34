#pragma once

// Second-order jump-diffusion model:
//
//   dY_t = X_t dt
//   dX_t = mu(X_{t-}) dt + sigma(X_{t-}) dW_t + \int c(X_{t-}, z) (p - q)(dt, dz)
//
// with p a Poisson random measure of intensity q(dt, dz) = f(z) dz dt.
// Only finite-activity Levy densities (lambda = \int f < inf) are supported.

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "sojd/rng.hpp"

namespace sojd {

struct ScalarField {
  std::string name;
  std::function<double(double)> fn;
  int smoothness = 2;  // user-asserted differentiability order

  double operator()(double x) const { return fn(x); }
};

class JumpField {
 public:
  JumpField(std::string name, std::function<double(double, double)> fn);

  /// c(x, z) = z.
  static JumpField identity();
  /// c(x, z) = 0.
  static JumpField zero();

  double operator()(double x, double z) const { return fn_(x, z); }
  const std::string& name() const noexcept { return name_; }
  bool is_identity() const noexcept { return kind_ == Kind::identity; }
  bool is_zero() const noexcept { return kind_ == Kind::zero; }

 private:
  enum class Kind { general, identity, zero };
  JumpField(std::string name, std::function<double(double, double)> fn, Kind kind);

  std::string name_;
  std::function<double(double, double)> fn_;
  Kind kind_ = Kind::general;
};

/// Finite-activity Levy density f(z) = lambda * g(z), with g a named mark
/// distribution that the simulator samples from.
class LevyDensity {
 public:
  enum class Family { none, normal, laplace };

  static LevyDensity none();
  static LevyDensity normal(double intensity, double mean, double sd);
  static LevyDensity laplace(double intensity, double mean, double scale);

  Family family() const noexcept { return family_; }
  double intensity() const noexcept { return lambda_; }
  double location() const noexcept { return loc_; }
  double scale() const noexcept { return scale_; }

  /// f(z) = lambda * g(z).
  double density(double z) const;
  /// g(z), the normalized mark density.
  double mark_density(double z) const;
  /// Raw moment E[Z^k] of the mark distribution, k in 0..4.
  double mark_moment(int k) const;
  double sample_mark(rng::Stream& s) const;
  /// Interval outside which g carries less than the given mass. The default
  /// is far below 1e-12 so that tails of c^4 g are negligible too.
  std::pair<double, double> truncated_support(double tail_mass = kTailMass) const;

  static constexpr double kTailMass = 1e-20;
  std::string describe() const;

 private:
  LevyDensity(Family f, double lambda, double loc, double scale);

  Family family_ = Family::none;
  double lambda_ = 0.0;
  double loc_ = 0.0;
  double scale_ = 1.0;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
};

/// User-asserted probabilistic assumptions; not verified computationally.
struct AssumptionFlags {
  bool lipschitz_growth = false;  // local Lipschitz + linear growth
  bool ergodic_stationary = false;
  bool rho_mixing = false;
  bool bounded_moments = false;

  bool all() const noexcept {
    return lipschitz_growth && ergodic_stationary && rho_mixing && bounded_moments;
  }
};

class ModelSpec {
 public:
  ModelSpec(std::string name, ScalarField drift, ScalarField diffusion, JumpField jump,
            LevyDensity levy, Interval range = {},
            std::optional<std::function<double(double)>> stationary_density = std::nullopt,
            AssumptionFlags flags = {});

  const std::string& name() const noexcept { return name_; }
  const ScalarField& drift() const noexcept { return drift_; }
  const ScalarField& diffusion() const noexcept { return diffusion_; }
  const JumpField& jump() const noexcept { return jump_; }
  const LevyDensity& levy() const noexcept { return levy_; }
  const Interval& range() const noexcept { return range_; }
  const AssumptionFlags& assumptions() const noexcept { return flags_; }
  const std::optional<std::function<double(double)>>& stationary_density() const noexcept {
    return stationary_;
  }

  double mu(double x) const { return drift_(x); }
  double sigma(double x) const { return diffusion_(x); }
  double c(double x, double z) const { return jump_(x, z); }

  /// \int c^k(x, z) f(z) dz, in closed form when c is the identity or zero,
  /// otherwise by quadrature (see jump_moment()). Used on hot paths such as
  /// the per-step compensator.
  double jump_moment_fast(int k, double x) const;

 private:
  std::string name_;
  ScalarField drift_;
  ScalarField diffusion_;
  JumpField jump_;
  LevyDensity levy_;
  Interval range_;
  std::optional<std::function<double(double)>> stationary_;
  AssumptionFlags flags_;
};

/// \int c^k(x, z) f(z) dz for k in {1, 2, 3, 4}, by adaptive quadrature with
/// absolute tolerance 1e-10 on the support where the mark distribution's
/// tail mass is below 1e-12.
double jump_moment(const ModelSpec& model, int k, double x);

/// sigma^2(x) + \int c^2(x, z) f(z) dz, the target of the second-moment
/// estimator.
double second_moment_target(const ModelSpec& model, double x);

/// A named preset together with its natural starting state.
struct Preset {
  std::string name;
  std::map<std::string, double> params;
  ModelSpec model;
  double x0 = 0.0;

  /// Stable text identifying the preset and its resolved parameters.
  std::string describe() const;
};

/// "ou-jump":  mu = -theta x, sigma = s, c = z, f = lambda N(0, eta^2).
/// "cir-jump": mu = kappa (alpha - x), sigma = s sqrt(max(x, 0)), same c, f.
/// Parameters missing from `overrides` take preset defaults; unknown keys
/// raise ConfigError.
Preset make_preset(const std::string& name, const std::map<std::string, double>& overrides = {});

/// Default parameter values of a preset.
std::map<std::string, double> preset_defaults(const std::string& name);

}  // namespace sojd
