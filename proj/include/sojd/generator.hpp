#pragma once

// Numeric infinitesimal generator of the pair (X, Y):
//
//   Lg(x, y) = x g_y + mu(x) g_x + 1/2 sigma^2(x) g_xx
//            + \int { g(x + c(x, z), y) - g(x, y) - g_x c(x, z) } f(z) dz
//
// and Monte Carlo checks of the conditional moments of the difference
// quotients that motivate the estimators.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sojd/model.hpp"

namespace sojd {

struct TestFunction {
  std::string name;
  std::function<double(double, double)> fn;
  int smoothness = 8;  // asserted order of differentiability
  bool polynomial_growth = true;

  double operator()(double x, double y) const { return fn(x, y); }
};

/// Lg(x, y) with central finite differences (three-point, step
/// cbrt(eps) max(1, |x|) for first derivatives; five-point, step
/// eps^(1/6) max(1, |x|) for the second) and the jump integral by adaptive
/// quadrature. Throws NumericError on a non-finite probe or quadrature
/// failure.
double apply_generator(const ModelSpec& model, const TestFunction& g, double x, double y);

/// L^j g(x, y) by recursive application. Levels above the first difference
/// L^(j-1) g with five-point stencils whose steps widen with the noise nu of
/// the inner level: nu^(1/5) for first and nu^(1/6) for second derivatives.
double apply_generator_power(const ModelSpec& model, const TestFunction& g, int j, double x, double y);

struct ExpansionResult {
  double value = 0.0;
  int order = 0;
  std::vector<double> terms;  // L^j g(x, y) delta^j / j!, j = 0..order
  double remainder_estimate = 0.0;
};

/// sum_{j=0..order} L^j g(x, y) delta^j / j!, order in 0..3. Throws
/// ExpansionUnstableError when a term of order >= 2 exceeds every earlier
/// term in magnitude, or is not finite.
ExpansionResult expand_conditional(const ModelSpec& model, const TestFunction& g, double x, double y,
                                   double delta, int order);

struct McOptions {
  std::size_t reps = 100000;
  std::uint64_t seed = 7;
  std::size_t substeps = 100;  // fine steps per sampling step
  double slack = 0.05;         // additive tolerance of the pass rule
  unsigned threads = 1;
};

/// Conditional Monte Carlo of one relation, started fresh at X = x, Y = 0.
/// `lhs_mc`/`se` are the plain sample mean and its standard error. The `_cv`
/// fields use the same paths with a control variate: the process with every
/// coefficient frozen at x, driven by the same shocks, whose expectation is
/// known exactly on the fine grid. pass = |gap| <= 3 se + slack.
struct RelationReport {
  std::string relation;
  double x = 0.0;
  double delta = 0.0;
  std::size_t reps = 0;
  std::size_t substeps = 0;
  double lhs_mc = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double se = 0.0;
  double lhs_cv = 0.0;
  double gap_cv = 0.0;
  double se_cv = 0.0;
  double slack = 0.0;
  bool pass = false;
};

/// E[(X~_{i+1} - X~_i) / delta | X_{(i-1)delta} = x] against mu(x).
RelationReport verify_drift_relation(const ModelSpec& model, double x, double delta, const McOptions& opts);

/// E[(X~_{i+1} - X~_i)^2 / delta | X_{(i-1)delta} = x] against
/// 2/3 (sigma^2(x) + \int c^2(x, z) f(z) dz).
RelationReport verify_second_moment_relation(const ModelSpec& model, double x, double delta, const McOptions& opts);

struct TermReport {
  std::string term;
  double mc = 0.0;
  double se = 0.0;
  double closed_form = 0.0;
  double gap = 0.0;
  bool pass = false;
};

/// Inner-expectation decomposition of the squared second difference of Y
/// over one step from X_{(i-1)delta} = x, Y_{(i-1)delta} = 0, with
/// D = Y_{i delta} - Y_{(i-1)delta} and X = X_{i delta}:
///   A1 = D^2 / delta^3
///   A2 = -2 D X / delta^2
///   A3 = (X^2 - mu(X) D) / delta
///   A4 = X mu(X) + sigma^2(X) / 3 + \int c^2(X, z) f(z) dz / 3
/// Each term's Monte Carlo mean is compared with its closed-form conditional
/// expectation; the last entry ("sum") is A1+A2+A3+A4 against
/// 2/3 (sigma^2(x) + \int c^2 f), passing within 3 standard errors.
struct AppendixReport {
  double x = 0.0;
  double delta = 0.0;
  std::size_t reps = 0;
  std::size_t substeps = 0;
  std::vector<TermReport> terms;
  bool pass = false;
};

AppendixReport verify_appendix_terms(const ModelSpec& model, double x, double delta, const McOptions& opts);

/// Least-squares slope of log|gap| on log(delta).
double gap_slope(std::span<const double> deltas, std::span<const double> gaps);

}  // namespace sojd
