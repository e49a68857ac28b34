#include <gtest/gtest.h>

#include <cmath>

#include "sojd/errors.hpp"
#include "sojd/kernels.hpp"
#include "sojd/rng.hpp"

using namespace sojd;

TEST(Kernel, GaussianValues) {
  const auto k = Kernel::gaussian();
  EXPECT_NEAR(k(0.0), 0.3989423, 1e-7);
  EXPECT_NEAR(k.k2(), 0.2820948, 1e-7);
  EXPECT_NEAR(k.k2(), 1.0 / (2.0 * std::sqrt(std::acos(-1.0))), 1e-10);
  EXPECT_EQ(k.support_radius(), std::numeric_limits<double>::infinity());
}

TEST(Kernel, QuarticValues) {
  const auto k = Kernel::quartic();
  EXPECT_EQ(k(2.0), 0.0);
  EXPECT_EQ(k(-1.0), 0.0);
  EXPECT_NEAR(k(0.0), 15.0 / 16.0, 1e-15);
  EXPECT_NEAR(k.k2(), 5.0 / 7.0, 1e-10);
  EXPECT_EQ(Kernel::by_name("biweight").kind(), KernelKind::quartic);
}

TEST(Kernel, Symmetric) {
  rng::Stream s(rng::stream_key(9));
  for (const auto& k : {Kernel::gaussian(), Kernel::quartic()}) {
    for (int i = 0; i < 100; ++i) {
      const double u = 6.0 * (s.uniform() - 0.5);
      EXPECT_EQ(k(u), k(-u));
    }
  }
}

TEST(Kernel, K2BoundedBySup) {
  for (const auto& k : {Kernel::gaussian(), Kernel::quartic()}) EXPECT_LE(k.k2(), k.sup());
}

TEST(Kernel, EpanechnikovSquaredIntegral) {
  EXPECT_NEAR(integrated_square([](double u) { return std::abs(u) < 1 ? 0.75 * (1 - u * u) : 0.0; }, 1.0), 0.6,
              1e-10);
}

TEST(Kernel, RejectsNonSmoothOrInvalid) {
  EXPECT_THROW(Kernel::by_name("uniform"), ArgumentError);
  EXPECT_THROW(Kernel::custom("uniform", [](double u) { return std::abs(u) <= 1 ? 0.5 : 0.0; }, 1.0), ArgumentError);
  EXPECT_THROW(Kernel::custom("epan", [](double u) { return std::abs(u) < 1 ? 0.75 * (1 - u * u) : 0.0; }, 1.0),
               ArgumentError);
  EXPECT_THROW(Kernel::custom("mass2", [](double u) { return 2.0 * std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI); },
                              std::numeric_limits<double>::infinity()),
               ArgumentError);
  EXPECT_THROW(Kernel::custom("skew", [](double u) { return std::abs(u) < 1 ? (15.0 / 16.0) * std::pow(1 - u * u, 2) * (1 + 0.5 * u) : 0.0; }, 1.0),
               ArgumentError);
  EXPECT_THROW(Kernel::by_name("nope"), ArgumentError);
}

TEST(Kernel, CustomTriweightAccepted) {
  const auto k = Kernel::custom(
      "triweight", [](double u) { return std::abs(u) < 1 ? 35.0 / 32.0 * std::pow(1 - u * u, 3) : 0.0; }, 1.0);
  EXPECT_NEAR(k.k2(), 350.0 / 429.0, 1e-9);
}

TEST(Bandwidth, DefaultRule) {
  EXPECT_NEAR(default_bandwidth(0.001), 0.284804, 1e-6);
  EXPECT_NEAR(default_bandwidth(0.01), 0.432876, 1e-6);
  EXPECT_NEAR(default_bandwidth(1.0 - 1e-12), 1.0, 1e-9);
  double prev = 0.0;
  for (double d = 1e-6; d < 1.0; d *= 1.7) {
    const double h = default_bandwidth(d);
    EXPECT_GT(h, prev);
    prev = h;
  }
  EXPECT_THROW(default_bandwidth(1.0), ArgumentError);
  EXPECT_THROW(default_bandwidth(0.0), ArgumentError);
  try {
    default_bandwidth(2.0);
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("2/11"), std::string::npos);
  }
}
