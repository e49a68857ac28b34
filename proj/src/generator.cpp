#include "sojd/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sojd/errors.hpp"
#include "sojd/parallel.hpp"
#include "sojd/quadrature.hpp"
#include "sojd/simulator.hpp"

namespace sojd {
namespace {

using Fn = std::function<double(double, double)>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kBlock = 256;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double probe(const Fn& f, double x, double y) {
  const double v = f(x, y);
  if (!std::isfinite(v)) {
    throw NumericError("non-finite derivative probe at (x, y) = (" + fmt(x) + ", " + fmt(y) + ")");
  }
  return v;
}

// Relative rounding noise of the function differenced at nesting level
// `level`: machine precision for g itself, then the quadrature tolerance, then
// what a five-point second difference leaves of the level below.
double noise(int level) {
  if (level <= 1) return kEps;
  double nu = 1e-10;
  for (int l = 3; l <= level; ++l) nu = std::pow(nu, 2.0 / 3.0);
  return nu;
}

double first_difference(const Fn& F, double x, double y, double h, bool along_x, bool five_point) {
  auto at = [&](double k) { return along_x ? probe(F, x + k * h, y) : probe(F, x, y + k * h); };
  if (!five_point) return (at(1) - at(-1)) / (2.0 * h);
  return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
}

// One application of L to F, with difference steps for nesting level `level`.
double generator_once(const ModelSpec& m, const Fn& F, double x, double y, int level) {
  const double sx = std::max(1.0, std::abs(x));
  const double sy = std::max(1.0, std::abs(y));
  const double nu = noise(level);
  const bool five = level > 1;
  const double h1 = (five ? std::pow(nu, 0.2) : std::cbrt(kEps));
  const double h2 = std::pow(nu, 1.0 / 6.0) * sx;

  const double f0 = probe(F, x, y);
  const double fx = first_difference(F, x, y, h1 * sx, true, five);
  const double fy = first_difference(F, x, y, h1 * sy, false, five);

  const double mu = m.mu(x);
  const double sigma = m.sigma(x);
  double value = x * fy + mu * fx;
  if (sigma != 0.0) {
    const double fxx = (-probe(F, x + 2.0 * h2, y) + 16.0 * probe(F, x + h2, y) - 30.0 * f0 +
                        16.0 * probe(F, x - h2, y) - probe(F, x - 2.0 * h2, y)) /
                       (12.0 * h2 * h2);
    value += 0.5 * sigma * sigma * fxx;
  }

  const LevyDensity& levy = m.levy();
  if (levy.intensity() > 0.0 && !m.jump().is_zero()) {
    auto integrand = [&](double z) {
      const double g = levy.mark_density(z);
      if (g == 0.0) return 0.0;
      const double c = m.c(x, z);
      return (probe(F, x + c, y) - f0 - fx * c) * g;
    };
    const auto [lo, hi] = levy.truncated_support();
    const double mid = std::clamp(levy.location(), lo, hi);
    quad::Options opts;
    opts.abs_tol = 1e-10 * std::pow(1e3, level - 1) * std::max({1.0, std::abs(f0), std::abs(fx)});
    double jump = 0.0;
    try {
      jump = quad::integrate(integrand, lo, mid, opts).value + quad::integrate(integrand, mid, hi, opts).value;
    } catch (const NumericError& e) {
      throw NumericError(std::string("generator jump integral failed: ") + e.what());
    }
    value += levy.intensity() * jump;
  }
  if (!std::isfinite(value)) {
    throw NumericError("generator value is not finite at (x, y) = (" + fmt(x) + ", " + fmt(y) + ")");
  }
  return value;
}

double power(const ModelSpec& m, const Fn& g, int j, double x, double y) {
  if (j == 0) return probe(g, x, y);
  Fn inner = [&m, &g, j](double xx, double yy) { return power(m, g, j - 1, xx, yy); };
  return generator_once(m, inner, x, y, j);
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

// Ordered two-pass mean and standard error of the mean.
Moments moments(const std::vector<double>& v) {
  Moments out;
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

void check_inputs(const ModelSpec& model, double x, double delta, const McOptions& opts) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("delta must be positive, got " + fmt(delta));
  if (!model.range().contains(x)) throw ArgumentError("x = " + fmt(x) + " is outside the admissible range");
  if (opts.reps < 2) throw ArgumentError("reps must be at least 2");
  if (opts.substeps < 1) throw ArgumentError("substeps must be at least 1");
}

// Runs body(rep, shock) for every replicate in fixed blocks; each replicate
// owns stream_key(seed, rep, tag).
template <class Body>
void for_replicates(const McOptions& opts, std::uint64_t tag, Body&& body) {
  const std::size_t blocks = (opts.reps + kBlock - 1) / kBlock;
  parallel_for(blocks, resolve_threads(opts.threads), [&](std::size_t b) {
    EulerScheme::Shock shock;
    const std::size_t end = std::min(opts.reps, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      rng::Stream stream(rng::stream_key(opts.seed, r, tag));
      body(r, stream, shock);
    }
  });
}

[[noreturn]] void explode(double t) {
  throw ExplosionError(t, "conditional simulation exploded at t = " + fmt(t));
}

// Second difference of the quotient pair over two sampling steps started at
// x, for the real path and the frozen-coefficient path on the same shocks.
struct Triples {
  std::vector<double> real;
  std::vector<double> frozen;
};

Triples simulate_triples(const ModelSpec& model, double x, double delta, const McOptions& opts) {
  const std::size_t m = opts.substeps;
  const double dt = delta / static_cast<double>(m);
  const EulerScheme scheme(model, dt);
  Triples t;
  t.real.resize(opts.reps);
  t.frozen.resize(opts.reps);
  for_replicates(opts, 0, [&](std::size_t r, rng::Stream& stream, EulerScheme::Shock& shock) {
    double xr = x, xf = x, yr = 0.0, yf = 0.0, yr1 = 0.0, yf1 = 0.0;
    for (std::size_t k = 0; k < 2 * m; ++k) {
      scheme.draw(stream, shock);
      yr += xr * dt;
      yf += xf * dt;
      xr = scheme.advance(xr, shock);
      xf = scheme.advance_frozen(xf, x, shock);
      if (!std::isfinite(xr)) explode(static_cast<double>(k + 1) * dt);
      if (k + 1 == m) {
        yr1 = yr;
        yf1 = yf;
      }
    }
    t.real[r] = ((yr - yr1) / delta - yr1 / delta);
    t.frozen[r] = ((yf - yf1) / delta - yf1 / delta);
  });
  return t;
}

RelationReport finish(std::string relation, double x, double delta, const McOptions& opts, double rhs,
                      double frozen_exact, const std::vector<double>& real,
                      const std::vector<double>& frozen) {
  RelationReport rep;
  rep.relation = std::move(relation);
  rep.x = x;
  rep.delta = delta;
  rep.reps = opts.reps;
  rep.substeps = opts.substeps;
  rep.slack = opts.slack;
  rep.rhs = rhs;
  const Moments plain = moments(real);
  rep.lhs_mc = plain.mean;
  rep.se = plain.se;
  rep.gap = rep.lhs_mc - rhs;
  std::vector<double> diff(real.size());
  for (std::size_t i = 0; i < real.size(); ++i) diff[i] = real[i] - frozen[i];
  const Moments cv = moments(diff);
  rep.lhs_cv = cv.mean + frozen_exact;
  rep.se_cv = cv.se;
  rep.gap_cv = rep.lhs_cv - rhs;
  rep.pass = std::abs(rep.gap) <= 3.0 * rep.se + opts.slack;
  return rep;
}

}  // namespace

double apply_generator(const ModelSpec& model, const TestFunction& g, double x, double y) {
  return apply_generator_power(model, g, 1, x, y);
}

double apply_generator_power(const ModelSpec& model, const TestFunction& g, int j, double x, double y) {
  if (j < 0 || j > 3) throw ArgumentError("generator power must be in 0..3, got " + std::to_string(j));
  if (!g.fn) throw ArgumentError("test function is empty");
  if (j > 0 && g.smoothness < 2 * j) {
    throw ArgumentError("test function '" + g.name + "' is asserted C^" + std::to_string(g.smoothness) +
                        "; L^" + std::to_string(j) + " needs C^" + std::to_string(2 * j));
  }
  return power(model, g.fn, j, x, y);
}

ExpansionResult expand_conditional(const ModelSpec& model, const TestFunction& g, double x, double y,
                                   double delta, int order) {
  if (order < 0 || order > 3) throw ArgumentError("expansion order must be in 0..3, got " + std::to_string(order));
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive, got " + fmt(delta));
  ExpansionResult res;
  res.order = order;
  double scale = 1.0;  // delta^j / j!
  double largest = 0.0;
  for (int j = 0; j <= order; ++j) {
    if (j > 0) scale *= delta / j;
    const double term = apply_generator_power(model, g, j, x, y) * scale;
    if (!std::isfinite(term) || (j >= 2 && std::abs(term) > largest)) {
      throw ExpansionUnstableError("expansion term of order " + std::to_string(j) + " (" + fmt(term) +
                                   ") is not damped by earlier terms; reduce delta or the order");
    }
    largest = std::max(largest, std::abs(term));
    res.terms.push_back(term);
  }
  for (double t : res.terms) res.value += t;
  // Next-order size guessed from the ratio of the last two terms.
  if (order >= 1 && res.terms[order - 1] != 0.0) {
    const double ratio = std::abs(res.terms[order] / res.terms[order - 1]);
    res.remainder_estimate = std::abs(res.terms[order]) * ratio;
  } else {
    res.remainder_estimate = std::abs(res.terms.back()) * delta;
  }
  return res;
}

RelationReport verify_drift_relation(const ModelSpec& model, double x, double delta, const McOptions& opts) {
  check_inputs(model, x, delta, opts);
  Triples t = simulate_triples(model, x, delta, opts);
  for (auto& v : t.real) v /= delta;
  for (auto& v : t.frozen) v /= delta;
  const double mu = model.mu(x);
  return finish("33", x, delta, opts, mu, mu, t.real, t.frozen);
}

RelationReport verify_second_moment_relation(const ModelSpec& model, double x, double delta, const McOptions& opts) {
  check_inputs(model, x, delta, opts);
  Triples t = simulate_triples(model, x, delta, opts);
  for (auto& v : t.real) v = v * v / delta;
  for (auto& v : t.frozen) v = v * v / delta;
  const double target = second_moment_target(model, x);
  const double m = static_cast<double>(opts.substeps);
  const double mu = model.mu(x);
  const double frozen_exact = target * (2.0 / 3.0 + 1.0 / (3.0 * m * m)) + mu * mu * delta;
  return finish("34", x, delta, opts, 2.0 / 3.0 * target, frozen_exact, t.real, t.frozen);
}

AppendixReport verify_appendix_terms(const ModelSpec& model, double x, double delta, const McOptions& opts) {
  check_inputs(model, x, delta, opts);
  const std::size_t m = opts.substeps;
  const double dt = delta / static_cast<double>(m);
  const EulerScheme scheme(model, dt);
  std::vector<std::vector<double>> a(5, std::vector<double>(opts.reps));
  for_replicates(opts, 1, [&](std::size_t r, rng::Stream& stream, EulerScheme::Shock& shock) {
    double xr = x, d = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      scheme.draw(stream, shock);
      d += xr * dt;
      xr = scheme.advance(xr, shock);
      if (!std::isfinite(xr)) explode(static_cast<double>(k + 1) * dt);
    }
    const double mu = model.mu(xr);
    const double s = model.sigma(xr);
    const double a1 = d * d / (delta * delta * delta);
    const double a2 = -2.0 * d * xr / (delta * delta);
    const double a3 = (xr * xr - mu * d) / delta;
    const double a4 = xr * mu + s * s / 3.0 + model.jump_moment_fast(2, xr) / 3.0;
    a[0][r] = a1;
    a[1][r] = a2;
    a[2][r] = a3;
    a[3][r] = a4;
    a[4][r] = a1 + a2 + a3 + a4;
  });

  const double mu = model.mu(x);
  const double s2 = model.sigma(x) * model.sigma(x);
  const double c2 = model.range().contains(x) ? jump_moment(model, 2, x) : 0.0;
  const double q = x * x / delta;
  const double closed[5] = {
      q + mu * x + s2 / 3.0 + c2 / 3.0,
      -2.0 * q - 3.0 * mu * x - s2 - c2,
      q + x * mu + s2 + c2,
      x * mu + s2 / 3.0 + c2 / 3.0,
      2.0 / 3.0 * (s2 + c2),
  };
  const char* names[5] = {"A1", "A2", "A3", "A4", "sum"};

  AppendixReport rep;
  rep.x = x;
  rep.delta = delta;
  rep.reps = opts.reps;
  rep.substeps = m;
  rep.pass = true;
  for (int i = 0; i < 5; ++i) {
    const Moments mo = moments(a[i]);
    TermReport t;
    t.term = names[i];
    t.mc = mo.mean;
    t.se = mo.se;
    t.closed_form = closed[i];
    t.gap = t.mc - t.closed_form;
    t.pass = i == 4 ? std::abs(t.gap) <= 3.0 * t.se : std::abs(t.gap) <= 3.0 * t.se + opts.slack;
    rep.pass = rep.pass && t.pass;
    rep.terms.push_back(t);
  }
  return rep;
}

double gap_slope(std::span<const double> deltas, std::span<const double> gaps) {
  if (deltas.size() != gaps.size() || deltas.size() < 2) {
    throw ArgumentError("gap_slope needs at least two (delta, gap) pairs of equal length");
  }
  const double n = static_cast<double>(deltas.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ArgumentError("gap_slope: delta must be positive");
    const double lx = std::log(deltas[i]);
    const double ly = std::log(std::max(std::abs(gaps[i]), std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ArgumentError("gap_slope: deltas must not all be equal");
  return (n * sxy - sx * sy) / den;
}

}  // namespace sojd
