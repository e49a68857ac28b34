#include "sojd/estimators.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sojd/errors.hpp"
#include "sojd/parallel.hpp"
#include "sojd/simd/kernel_sums.hpp"

namespace sojd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

simd::KernelSums kernel_sums(const NwDesign& d, const Kernel& k, double h, double x) {
  switch (k.kind()) {
    case KernelKind::gaussian:
      return simd::gaussian_sums(d.centers(), d.drift_response(), d.second_response(), x, h);
    case KernelKind::quartic:
      return simd::quartic_sums(d.centers(), d.drift_response(), d.second_response(), x, h);
    case KernelKind::custom:
      break;
  }
  simd::KernelSums s;
  const auto c = d.centers();
  const auto a = d.drift_response();
  const auto b = d.second_response();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = k((x - c[i]) / h);
    s.w += w;
    s.ww += w * w;
    s.wa += w * a[i];
    s.wb += w * b[i];
  }
  return s;
}

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ArgumentError("bandwidth must be positive, got " + fmt(h) +
                        " (use 'auto' for the default rule h = delta^(2/11))");
  }
}

}  // namespace

NwDesign::NwDesign(Source s, double delta, std::size_t n)
    : source_(s), delta_(delta), centers_(n), drift_(n), second_(n) {}

NwDesign NwDesign::from_tilde(const ObservationSet& obs) {
  const std::size_t n = obs.usable();
  if (n == 0) throw InsufficientDataError("no usable difference-quotient triples");
  const double delta = obs.delta;
  NwDesign d(Source::tilde, delta, n);
  const auto& xt = obs.x_tilde;
  for (std::size_t j = 0; j < n; ++j) {
    const double inc = xt[j + 2] - xt[j + 1];
    d.centers_[j] = xt[j];
    d.drift_[j] = inc / delta;
    d.second_[j] = 1.5 * inc * inc / delta;
  }
  return d;
}

NwDesign NwDesign::from_exact(std::span<const double> series, double delta) {
  if (series.size() < 2) throw InsufficientDataError("exact series needs at least two values");
  if (!(delta > 0.0)) throw ArgumentError("sampling step must be positive");
  const std::size_t n = series.size() - 1;
  NwDesign d(Source::exact, delta, n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double inc = series[i] - series[i - 1];
    d.centers_[i - 1] = series[i - 1];
    d.drift_[i - 1] = inc / delta;
    d.second_[i - 1] = inc * inc / delta;
  }
  return d;
}

PointEstimate nw_point(const NwDesign& design, const Kernel& k, double h, double x) {
  check_bandwidth(h);
  const std::size_t n = design.n();
  if (n == 0) throw InsufficientDataError("empty index set");
  const simd::KernelSums s = kernel_sums(design, k, h, x);
  const double nh = static_cast<double>(n) * h;
  PointEstimate e;
  e.p = s.w / nh;
  if (!(e.p >= kDensityFloor)) {
    throw NoDataNearPointError(x, "no data near x = " + fmt(x) + " (kernel density " + fmt(e.p) +
                                      " below floor); x is outside the visited range");
  }
  e.a = (s.wa / nh) / e.p;
  e.b = (s.wb / nh) / e.p;
  e.n_eff = s.ww > 0.0 ? s.w * s.w / s.ww : 0.0;
  return e;
}

double nw_density(const ObservationSet& obs, const Kernel& k, double h, double x) {
  check_bandwidth(h);
  const NwDesign d = NwDesign::from_tilde(obs);
  return kernel_sums(d, k, h, x).w / (static_cast<double>(d.n()) * h);
}

double nw_drift(const ObservationSet& obs, const Kernel& k, double h, double x) {
  return nw_point(NwDesign::from_tilde(obs), k, h, x).a;
}

double nw_second(const ObservationSet& obs, const Kernel& k, double h, double x) {
  return nw_point(NwDesign::from_tilde(obs), k, h, x).b;
}

BaselineEstimate nw_baseline(std::span<const double> x_exact, double delta, const Kernel& k, double h,
                             double x) {
  const PointEstimate e = nw_point(NwDesign::from_exact(x_exact, delta), k, h, x);
  return {e.p, e.a, e.b};
}

double asymptotic_variance(const ModelSpec& model, const Kernel& k, double x, Coefficient which,
                           double p_at_x) {
  if (!(p_at_x > 0.0) || !std::isfinite(p_at_x)) {
    throw ArgumentError("asymptotic_variance: density at x must be positive, got " + fmt(p_at_x));
  }
  switch (which) {
    case Coefficient::drift:
      return k.k2() * second_moment_target(model, x) / p_at_x;
    case Coefficient::second:
      return k.k2() * jump_moment(model, 4, x) / p_at_x;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

EstimateResult estimate_on_grid(const ObservationSet& obs, const Kernel& k, double h,
                                std::span<const double> grid,
                                const std::function<double(double)>& c4, unsigned threads) {
  check_bandwidth(h);
  if (grid.empty()) throw ArgumentError("evaluation grid is empty");
  const NwDesign design = NwDesign::from_tilde(obs);
  const std::size_t m = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EstimateResult r;
  r.grid.assign(grid.begin(), grid.end());
  r.p_hat.assign(m, nan);
  r.a_hat.assign(m, nan);
  r.b_hat.assign(m, nan);
  r.se_a.assign(m, nan);
  r.se_b.assign(m, nan);
  r.n_eff.assign(m, nan);
  std::vector<char> missing(m, 0);
  r.h = h;
  r.n = design.n();
  r.delta = obs.delta;
  r.kernel = k.name();
  r.data_source = design.source();

  const double scale = std::sqrt(h * static_cast<double>(design.n()) * obs.delta);
  parallel_for(m, threads, [&](std::size_t i) {
    PointEstimate e;
    try {
      e = nw_point(design, k, h, grid[i]);
    } catch (const NoDataNearPointError&) {
      missing[i] = 1;
      return;
    }
    r.p_hat[i] = e.p;
    r.a_hat[i] = e.a;
    r.b_hat[i] = e.b;
    r.n_eff[i] = e.n_eff;
    r.se_a[i] = std::sqrt(k.k2() * e.b / e.p) / scale;
    if (c4) r.se_b[i] = std::sqrt(k.k2() * c4(grid[i]) / e.p) / scale;
  });
  r.missing.assign(missing.begin(), missing.end());
  bool any = false;
  for (char f : missing) any = any || f == 0;
  if (!any) throw InsufficientDataError("no grid point has data nearby");
  return r;
}

}  // namespace sojd
