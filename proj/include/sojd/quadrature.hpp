#pragma once

#include <functional>

namespace sojd::quad {

struct Options {
  double abs_tol = 1e-10;
  // Maximum number of subintervals kept by the adaptive driver.
  int max_intervals = 2000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

/// Global adaptive Gauss-Kronrod (G10/K21) integration of f over the finite
/// interval [a, b]: the subinterval with the largest error estimate is
/// bisected until the summed estimate drops below opts.abs_tol.
/// Throws NumericError if the budget runs out or f returns a non-finite value.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

/// Integral over (-inf, inf), (a, inf) or (-inf, b) via the substitution
/// x = t / (1 - t^2) mapped onto the finite-interval driver. Finite bounds
/// dispatch to integrate().
Result integrate_any(const std::function<double(double)>& f, double a, double b,
                     const Options& opts = {});

}  // namespace sojd::quad
