#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "sojd/errors.hpp"
#include "sojd/quadrature.hpp"

using namespace sojd;

TEST(Quadrature, Polynomial) {
  const auto r = quad::integrate([](double x) { return 3 * x * x; }, 0.0, 2.0);
  EXPECT_NEAR(r.value, 8.0, 1e-12);
}

TEST(Quadrature, GaussianOverRealLine) {
  const auto r = quad::integrate_any([](double x) { return std::exp(-0.5 * x * x); },
                                     -std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity());
  EXPECT_NEAR(r.value, std::sqrt(2.0 * std::numbers::pi), 1e-9);
}

TEST(Quadrature, HalfLine) {
  const auto r = quad::integrate_any([](double x) { return std::exp(-x); }, 0.0,
                                     std::numeric_limits<double>::infinity());
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(Quadrature, KinkNeedsSubdivision) {
  const auto r = quad::integrate([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0);
  EXPECT_NEAR(r.value, 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7, 1e-10);
  EXPECT_GT(r.intervals, 1);
}

TEST(Quadrature, NonFiniteIntegrandThrows) {
  EXPECT_THROW(quad::integrate([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0),
               NumericError);
}

TEST(Quadrature, BudgetExhaustionThrows) {
  quad::Options o;
  o.abs_tol = 1e-15;
  o.max_intervals = 3;
  EXPECT_THROW(quad::integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, o), NumericError);
}
