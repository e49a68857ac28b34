#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sojd/kernels.hpp"
#include "sojd/model.hpp"
#include "sojd/simulator.hpp"

namespace sojd {

/// Regression design shared by the three point estimators: kernel centers
/// with the drift and second-moment responses of each usable term.
class NwDesign {
 public:
  enum class Source { tilde, exact };

  /// Difference-quotient design: for term j = 0..n-1 the center is
  /// x_tilde[j], the drift response (x_tilde[j+2] - x_tilde[j+1]) / delta and
  /// the second-moment response 3/2 (x_tilde[j+2] - x_tilde[j+1])^2 / delta.
  static NwDesign from_tilde(const ObservationSet& obs);

  /// Exact-data baseline design on a series X_0..X_n: center X_{i-1},
  /// responses (X_i - X_{i-1}) / delta and (X_i - X_{i-1})^2 / delta (no 3/2).
  static NwDesign from_exact(std::span<const double> series, double delta);

  std::size_t n() const noexcept { return centers_.size(); }
  double delta() const noexcept { return delta_; }
  Source source() const noexcept { return source_; }
  std::span<const double> centers() const noexcept { return centers_; }
  std::span<const double> drift_response() const noexcept { return drift_; }
  std::span<const double> second_response() const noexcept { return second_; }

 private:
  NwDesign(Source s, double delta, std::size_t n);

  Source source_;
  double delta_;
  std::vector<double> centers_;
  std::vector<double> drift_;
  std::vector<double> second_;
};

struct PointEstimate {
  double p = 0.0;      // density
  double a = 0.0;      // drift
  double b = 0.0;      // second infinitesimal moment
  double n_eff = 0.0;  // (sum K)^2 / sum K^2
};

/// Denominator floor below which the regression estimators are undefined.
inline constexpr double kDensityFloor = 1e-300;

/// All three estimators at x from one pass over the design. Throws
/// NoDataNearPointError when the kernel density at x is below kDensityFloor,
/// InsufficientDataError for an empty design.
PointEstimate nw_point(const NwDesign& design, const Kernel& k, double h, double x);

/// (1 / (n h)) sum_{i=1..n} K((x - X~_{i-1}) / h) over the usable index set.
double nw_density(const ObservationSet& obs, const Kernel& k, double h, double x);
/// A_n(x) / p_n(x) with forward increments (X~_{i+1} - X~_i) / delta.
double nw_drift(const ObservationSet& obs, const Kernel& k, double h, double x);
/// B_n(x) / p_n(x) with responses 3/2 (X~_{i+1} - X~_i)^2 / delta.
double nw_second(const ObservationSet& obs, const Kernel& k, double h, double x);

struct BaselineEstimate {
  double p0 = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;
};

/// Estimators on the exact series X_0..X_n sampled every delta.
BaselineEstimate nw_baseline(std::span<const double> x_exact, double delta, const Kernel& k, double h,
                             double x);

enum class Coefficient { drift, second };

/// Limit variance of sqrt(h n delta) (estimate - target):
///   drift:  K2 (sigma^2(x) + \int c^2 f) / p(x)
///   second: K2 \int c^4 f / p(x)
double asymptotic_variance(const ModelSpec& model, const Kernel& k, double x, Coefficient which,
                           double p_at_x);

struct EstimateResult {
  std::vector<double> grid;
  std::vector<double> p_hat;
  std::vector<double> a_hat;
  std::vector<double> b_hat;
  std::vector<double> se_a;
  std::vector<double> se_b;
  std::vector<double> n_eff;
  std::vector<bool> missing;  // no data near the grid point; values are NaN
  double h = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  std::string kernel;
  NwDesign::Source data_source = NwDesign::Source::tilde;
};

/// Evaluates the estimators on a grid with plug-in standard errors
///   se_a = sqrt(K2 b_hat / p_hat) / sqrt(h n delta)
///   se_b = sqrt(K2 c4(x) / p_hat) / sqrt(h n delta)
/// where c4(x) = \int c^4(x, z) f(z) dz must come from model knowledge
/// (se_b is NaN without it). Grid points without nearby data are marked
/// missing; if all are missing, InsufficientDataError is thrown. Evaluation
/// is order independent and may use `threads` workers (0 = default).
EstimateResult estimate_on_grid(const ObservationSet& obs, const Kernel& k, double h,
                                std::span<const double> grid,
                                const std::function<double(double)>& c4 = {},
                                unsigned threads = 1);

}  // namespace sojd
