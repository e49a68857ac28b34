#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sojd/model.hpp"
#include "sojd/rng.hpp"

namespace sojd {

/// Fine-grid settings. The horizon is rounded to a whole number of steps.
class SimConfig {
 public:
  SimConfig(double fine_step, double horizon, double x0 = 0.0, double y0 = 0.0,
            std::uint64_t seed = 0);

  double fine_step() const noexcept { return dt_; }
  /// steps() * fine_step().
  double horizon() const noexcept { return static_cast<double>(steps_) * dt_; }
  std::size_t steps() const noexcept { return steps_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  double dt_;
  std::size_t steps_;
  double x0_;
  double y0_;
  std::uint64_t seed_;
};

struct FinePath {
  std::vector<double> times;  // k * dt, k = 0..steps
  std::vector<double> x;
  std::vector<double> y;      // y[k+1] = y[k] + x[k] * dt
  std::uint64_t seed = 0;
  std::size_t jump_count = 0;
};

/// Integrated observations y_obs[i] = Y(i * delta), i = 0..N, and the
/// difference quotients of Y. Index convention: x_tilde[j] holds
/// (y_obs[j+1] - y_obs[j]) / delta, the quotient over [j delta, (j+1) delta],
/// so x_tilde has N entries and there are n = N - 2 usable triples
/// (x_tilde[j], x_tilde[j+1], x_tilde[j+2]), j = 0..n-1.
struct ObservationSet {
  double delta = 0.0;
  std::vector<double> y_obs;
  std::vector<double> x_tilde;
  std::vector<double> x_true;  // X(i * delta), i = 0..N; empty for real data

  std::size_t usable() const noexcept { return x_tilde.size() >= 2 ? x_tilde.size() - 2 : 0; }

  /// Builds the quotients from integrated observations. Throws
  /// InsufficientDataError for fewer than 4 observations.
  static ObservationSet from_integrated(double delta, std::vector<double> y_obs,
                                        std::vector<double> x_true = {});
};

/// One Euler step of X with compensated finite-activity jumps:
///
///   X' = X + mu(X) dt + sigma(X) sqrt(dt) N + sum_j c(X, z_j) - dt \int c(X, z) f(z) dz
///
/// with a Poisson(lambda dt) number of marks z_j drawn from f / lambda.
/// Jumps use the pre-step state and are applied at the end of the step.
class EulerScheme {
 public:
  struct Shock {
    double gauss = 0.0;
    std::vector<double> marks;
  };

  /// Throws ConfigError if lambda * dt >= 1; warns on stderr once if
  /// lambda * dt >= 0.1.
  EulerScheme(const ModelSpec& model, double dt);

  double dt() const noexcept { return dt_; }

  /// Draw order per step: normal, Poisson count, then the marks.
  void draw(rng::Stream& s, Shock& shock) const;

  /// Next state under the model's coefficients.
  double advance(double x, const Shock& shock) const;

  /// Next state when every coefficient is frozen at `anchor`; used as a
  /// control variate sharing the shocks of advance().
  double advance_frozen(double x, double anchor, const Shock& shock) const;

  const ModelSpec& model() const noexcept { return *model_; }

 private:
  const ModelSpec* model_;
  double dt_;
  double sqrt_dt_;
  double jump_rate_;  // lambda * dt
};

/// Simulates the fine path using the stream keyed by stream_key(cfg.seed()).
/// Throws ExplosionError on a non-finite state.
FinePath simulate_path(const ModelSpec& model, const SimConfig& cfg);
FinePath simulate_path(const ModelSpec& model, const SimConfig& cfg, rng::Stream& stream);

/// Samples a fine path every `delta` time units. `delta` must be a whole
/// multiple of the fine step.
ObservationSet observe(const FinePath& path, double delta);

/// Same result as observe(simulate_path(model, cfg, stream), delta) without
/// storing the fine path.
ObservationSet simulate_observations(const ModelSpec& model, const SimConfig& cfg, double delta,
                                     rng::Stream& stream);

/// Runs X alone for `duration` time units from x0 and returns the end state.
double burn_in(const ModelSpec& model, double x0, double dt, double duration, rng::Stream& stream);

/// Number of fine steps per sampling step; throws ArgumentError unless delta
/// is a whole multiple of dt (relative tolerance 1e-9).
std::size_t steps_per_sample(double delta, double dt);

}  // namespace sojd
