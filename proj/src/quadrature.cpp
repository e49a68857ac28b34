#include "sojd/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "sojd/errors.hpp"

namespace sojd::quad {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece evaluate(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  // max_depth = 0: a single G10/K21 pair, error = |K21 - G10|.
  const double v = Rule::integrate(
      [&](double x) {
        const double y = f(x);
        if (!std::isfinite(y)) {
          std::ostringstream os;
          os << "quadrature: integrand is not finite at " << x;
          throw NumericError(os.str());
        }
        return y;
      },
      a, b, 0, 0.0, &err);
  return {a, b, v, err};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts) {
  if (!(std::isfinite(a) && std::isfinite(b))) {
    throw ArgumentError("quadrature: integrate() needs finite bounds");
  }
  if (a == b) return {};
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Piece> heap;
  heap.push(evaluate(f, a, b));
  double total_err = heap.top().error;
  double total = heap.top().value;
  while (total_err > opts.abs_tol) {
    if (static_cast<int>(heap.size()) >= opts.max_intervals) {
      std::ostringstream os;
      os << "quadrature did not converge: error estimate " << total_err
         << " exceeds tolerance " << opts.abs_tol << " after "
         << opts.max_intervals << " subintervals";
      throw NumericError(os.str());
    }
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw NumericError("quadrature did not converge: interval underflow");
    }
    const Piece left = evaluate(f, worst.a, mid);
    const Piece right = evaluate(f, mid, worst.b);
    heap.push(left);
    heap.push(right);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
  }
  // Re-sum once to drop the drift of the incremental updates.
  total = 0.0;
  total_err = 0.0;
  const int pieces = static_cast<int>(heap.size());
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  return {sign * total, total_err, pieces};
}

Result integrate_any(const std::function<double(double)>& f, double a, double b,
                     const Options& opts) {
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) return integrate(f, a, b, opts);
  auto mapped = [&f](double t) {
    const double d = 1.0 - t * t;
    const double x = t / d;
    const double jac = (1.0 + t * t) / (d * d);
    const double y = f(x);
    return y == 0.0 ? 0.0 : y * jac;
  };
  auto to_t = [](double x) {
    // inverse of x = t / (1 - t^2) on (-1, 1)
    if (x == 0.0) return 0.0;
    return (-1.0 + std::sqrt(1.0 + 4.0 * x * x)) / (2.0 * x);
  };
  const double ta = lo_inf ? -1.0 : to_t(a);
  const double tb = hi_inf ? 1.0 : to_t(b);
  return integrate(mapped, ta, tb, opts);
}

}  // namespace sojd::quad
