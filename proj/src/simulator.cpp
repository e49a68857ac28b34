#include "sojd/simulator.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <sstream>

#include "sojd/errors.hpp"

namespace sojd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Calls sink(k, x_k, y_k) for k = 0..steps.
template <class Sink>
std::size_t run_euler(const ModelSpec& model, const SimConfig& cfg, rng::Stream& stream, Sink&& sink) {
  const EulerScheme scheme(model, cfg.fine_step());
  const double dt = cfg.fine_step();
  EulerScheme::Shock shock;
  double x = cfg.x0();
  double y = cfg.y0();
  std::size_t jumps = 0;
  sink(std::size_t{0}, x, y);
  for (std::size_t k = 0; k < cfg.steps(); ++k) {
    scheme.draw(stream, shock);
    jumps += shock.marks.size();
    const double next = scheme.advance(x, shock);
    if (!std::isfinite(next)) {
      const double t = static_cast<double>(k + 1) * dt;
      throw ExplosionError(t, "simulation exploded: non-finite state at t = " + fmt(t));
    }
    y += x * dt;
    x = next;
    sink(k + 1, x, y);
  }
  return jumps;
}

}  // namespace

SimConfig::SimConfig(double fine_step, double horizon, double x0, double y0, std::uint64_t seed)
    : dt_(fine_step), steps_(0), x0_(x0), y0_(y0), seed_(seed) {
  if (!(fine_step > 0.0) || !std::isfinite(fine_step)) {
    throw ConfigError("fine step must be positive, got " + fmt(fine_step));
  }
  if (!(horizon >= fine_step) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be at least one fine step, got T = " + fmt(horizon));
  }
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw ConfigError("initial state must be finite");
  const double ratio = horizon / fine_step;
  const double rounded = std::round(ratio);
  if (std::abs(rounded - ratio) * fine_step > 0.5 * fine_step) {
    throw ConfigError("horizon is not a whole number of fine steps");
  }
  steps_ = static_cast<std::size_t>(rounded);
}

ObservationSet ObservationSet::from_integrated(double delta, std::vector<double> y_obs,
                                               std::vector<double> x_true) {
  if (!(delta > 0.0)) throw ArgumentError("sampling step must be positive");
  if (y_obs.size() < 4) {
    throw InsufficientDataError("need at least 4 observations, got " + std::to_string(y_obs.size()));
  }
  if (!x_true.empty() && x_true.size() != y_obs.size()) {
    throw ArgumentError("x_true and y_obs lengths differ");
  }
  ObservationSet obs;
  obs.delta = delta;
  obs.x_tilde.resize(y_obs.size() - 1);
  for (std::size_t j = 0; j + 1 < y_obs.size(); ++j) {
    obs.x_tilde[j] = (y_obs[j + 1] - y_obs[j]) / delta;
  }
  obs.y_obs = std::move(y_obs);
  obs.x_true = std::move(x_true);
  return obs;
}

EulerScheme::EulerScheme(const ModelSpec& model, double dt)
    : model_(&model), dt_(dt), sqrt_dt_(std::sqrt(dt)), jump_rate_(model.levy().intensity() * dt) {
  if (!(dt > 0.0)) throw ConfigError("fine step must be positive");
  if (jump_rate_ >= 1.0) {
    throw ConfigError("lambda * dt = " + fmt(jump_rate_) + " >= 1; reduce the fine step");
  }
  static std::atomic<bool> warned{false};
  if (jump_rate_ >= 0.1 && !warned.exchange(true)) {
    std::cerr << "warning: lambda * dt = " << jump_rate_
              << " >= 0.1; jump timing error may be noticeable\n";
  }
}

void EulerScheme::draw(rng::Stream& s, Shock& shock) const {
  shock.gauss = s.normal();
  shock.marks.clear();
  if (jump_rate_ > 0.0) {
    const unsigned count = s.poisson(jump_rate_);
    for (unsigned j = 0; j < count; ++j) shock.marks.push_back(model_->levy().sample_mark(s));
  }
}

double EulerScheme::advance(double x, const Shock& shock) const {
  const ModelSpec& m = *model_;
  const double s = m.sigma(x);
  if (!(s >= 0.0)) {
    throw ArgumentError("diffusion coefficient is negative or NaN at x = " + fmt(x));
  }
  double next = x + m.mu(x) * dt_ + s * sqrt_dt_ * shock.gauss;
  if (jump_rate_ > 0.0) {
    for (double z : shock.marks) next += m.c(x, z);
    next -= dt_ * m.jump_moment_fast(1, x);
  }
  return next;
}

double EulerScheme::advance_frozen(double x, double anchor, const Shock& shock) const {
  const ModelSpec& m = *model_;
  double next = x + m.mu(anchor) * dt_ + m.sigma(anchor) * sqrt_dt_ * shock.gauss;
  if (jump_rate_ > 0.0) {
    for (double z : shock.marks) next += m.c(anchor, z);
    next -= dt_ * m.jump_moment_fast(1, anchor);
  }
  return next;
}

FinePath simulate_path(const ModelSpec& model, const SimConfig& cfg) {
  rng::Stream stream(rng::stream_key(cfg.seed()));
  return simulate_path(model, cfg, stream);
}

FinePath simulate_path(const ModelSpec& model, const SimConfig& cfg, rng::Stream& stream) {
  FinePath path;
  const std::size_t count = cfg.steps() + 1;
  path.times.resize(count);
  path.x.resize(count);
  path.y.resize(count);
  path.seed = cfg.seed();
  const double dt = cfg.fine_step();
  path.jump_count = run_euler(model, cfg, stream, [&](std::size_t k, double x, double y) {
    path.times[k] = static_cast<double>(k) * dt;
    path.x[k] = x;
    path.y[k] = y;
  });
  return path;
}

std::size_t steps_per_sample(double delta, double dt) {
  if (!(delta > 0.0)) throw ArgumentError("sampling step must be positive, got " + fmt(delta));
  if (delta < dt * (1.0 - 1e-9)) {
    throw ArgumentError("sampling step " + fmt(delta) + " is smaller than the fine step " + fmt(dt));
  }
  const double ratio = delta / dt;
  const double m = std::round(ratio);
  if (std::abs(m - ratio) > 1e-9 * ratio) {
    throw ArgumentError("sampling step " + fmt(delta) + " is not a multiple of the fine step " + fmt(dt));
  }
  return static_cast<std::size_t>(m);
}

ObservationSet observe(const FinePath& path, double delta) {
  if (path.times.size() < 2) throw InsufficientDataError("path has fewer than two points");
  const double dt = path.times[1] - path.times[0];
  const std::size_t m = steps_per_sample(delta, dt);
  const std::size_t count = (path.x.size() - 1) / m + 1;
  if (count < 4) {
    throw InsufficientDataError("path yields " + std::to_string(count) +
                                " observations at this sampling step; need at least 4");
  }
  std::vector<double> y_obs(count);
  std::vector<double> x_true(count);
  for (std::size_t i = 0; i < count; ++i) {
    y_obs[i] = path.y[i * m];
    x_true[i] = path.x[i * m];
  }
  return ObservationSet::from_integrated(delta, std::move(y_obs), std::move(x_true));
}

ObservationSet simulate_observations(const ModelSpec& model, const SimConfig& cfg, double delta,
                                     rng::Stream& stream) {
  const std::size_t m = steps_per_sample(delta, cfg.fine_step());
  const std::size_t count = cfg.steps() / m + 1;
  if (count < 4) {
    throw InsufficientDataError("horizon yields " + std::to_string(count) +
                                " observations at this sampling step; need at least 4");
  }
  std::vector<double> y_obs(count);
  std::vector<double> x_true(count);
  run_euler(model, cfg, stream, [&](std::size_t k, double x, double y) {
    if (k % m == 0 && k / m < count) {
      y_obs[k / m] = y;
      x_true[k / m] = x;
    }
  });
  return ObservationSet::from_integrated(delta, std::move(y_obs), std::move(x_true));
}

double burn_in(const ModelSpec& model, double x0, double dt, double duration, rng::Stream& stream) {
  if (duration <= 0.0) return x0;
  const SimConfig cfg(dt, duration, x0, 0.0, 0);
  double last = x0;
  run_euler(model, cfg, stream, [&](std::size_t, double x, double) { last = x; });
  return last;
}

}  // namespace sojd
