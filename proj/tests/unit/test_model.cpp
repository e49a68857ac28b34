#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sojd/errors.hpp"
#include "sojd/model.hpp"
#include "sojd/rng.hpp"

using namespace sojd;

namespace {

ModelSpec with_jump(JumpField c, LevyDensity f) {
  return ModelSpec("t", {"zero", [](double) { return 0.0; }}, {"one", [](double) { return 1.0; }},
                   std::move(c), f);
}

}  // namespace

TEST(JumpMoment, ScaledStandardNormalSecondMoment) {
  const auto m = with_jump(JumpField("z", [](double, double z) { return z; }), LevyDensity::normal(2.0, 0.0, 1.0));
  EXPECT_NEAR(jump_moment(m, 2, 0.7), 2.0, 1e-9);
}

TEST(JumpMoment, SecondMomentMatchesSampledMarks) {
  const auto f = LevyDensity::normal(2.0, 0.0, 1.0);
  rng::Stream s(rng::stream_key(11));
  const int n = 1000000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = f.sample_mark(s);
    acc += z * z;
    acc2 += z * z * z * z;
  }
  const double mean = 2.0 * acc / n;
  const double se = 2.0 * std::sqrt((acc2 / n - (acc / n) * (acc / n)) / n);
  EXPECT_NEAR(mean, 2.0, 4.0 * se);
}

TEST(JumpMoment, ZeroJumpIsZero) {
  const auto m = with_jump(JumpField::zero(), LevyDensity::laplace(3.0, 0.1, 0.4));
  EXPECT_EQ(jump_moment(m, 2, 1.0), 0.0);
}

TEST(JumpMoment, StateScaledFourthMoment) {
  for (double lambda : {1.0, 2.5}) {
    const auto m = with_jump(JumpField("xz", [](double x, double z) { return x * z; }),
                             LevyDensity::normal(lambda, 0.0, 1.0));
    EXPECT_NEAR(jump_moment(m, 4, 2.0), 48.0 * lambda, 1e-8 * lambda);
  }
}

TEST(JumpMoment, EvenMomentsNonnegativeAndLinearInIntensity) {
  const JumpField c("sinz", [](double x, double z) { return std::sin(x) * z + 0.1 * z * z; });
  const auto m1 = with_jump(c, LevyDensity::laplace(1.0, 0.2, 0.5));
  const auto m2 = with_jump(c, LevyDensity::laplace(2.0, 0.2, 0.5));
  for (double x : {-2.0, -0.3, 0.0, 0.9, 3.1}) {
    for (int k : {2, 4}) {
      const double a = jump_moment(m1, k, x);
      const double b = jump_moment(m2, k, x);
      EXPECT_GE(a, 0.0);
      EXPECT_NEAR(b / a, 2.0, 2e-9);
    }
  }
}

TEST(JumpMoment, IdentityJumpConstantInState) {
  const auto m = with_jump(JumpField("z", [](double, double z) { return z; }), LevyDensity::normal(1.3, 0.2, 0.7));
  rng::Stream s(rng::stream_key(5));
  const double ref = jump_moment(m, 3, 0.0);
  for (int i = 0; i < 10; ++i) {
    const double x = 10.0 * (s.uniform() - 0.5);
    EXPECT_NEAR(jump_moment(m, 3, x), ref, 1e-12);
  }
}

TEST(JumpMoment, FastPathAgreesWithQuadrature) {
  const auto m = ModelSpec("t", {"z", [](double) { return 0.0; }}, {"o", [](double) { return 1.0; }},
                           JumpField::identity(), LevyDensity::laplace(1.5, -0.1, 0.3));
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(m.jump_moment_fast(k, 0.4), jump_moment(m, k, 0.4), 1e-10) << k;
}

TEST(JumpMoment, RejectsBadArguments) {
  const auto p = make_preset("ou-jump");
  EXPECT_THROW(jump_moment(p.model, 0, 0.0), ArgumentError);
  EXPECT_THROW(jump_moment(p.model, 5, 0.0), ArgumentError);
  const auto cir = make_preset("cir-jump");
  EXPECT_THROW(jump_moment(cir.model, 2, std::numeric_limits<double>::infinity()), ArgumentError);
}

TEST(ModelSpec, RejectsEmptyRangeAndNegativeDiffusion) {
  auto zero = ScalarField{"z", [](double) { return 0.0; }};
  EXPECT_THROW(ModelSpec("bad", zero, zero, JumpField::zero(), LevyDensity::none(), Interval{1.0, 1.0}), Error);
  EXPECT_THROW(ModelSpec("bad", zero, {"neg", [](double) { return -1.0; }}, JumpField::zero(), LevyDensity::none()),
               Error);
}

TEST(ModelSpec, ChecksStationaryDensityNormalization) {
  auto zero = ScalarField{"z", [](double) { return 0.0; }};
  auto half = [](double x) { return 0.5 * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  EXPECT_THROW(ModelSpec("bad", zero, zero, JumpField::zero(), LevyDensity::none(), {}, half), Error);
  auto full = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  EXPECT_NO_THROW(ModelSpec("ok", zero, zero, JumpField::zero(), LevyDensity::none(), {}, full));
}

TEST(Presets, DefaultsAndOverrides) {
  const auto p = make_preset("ou-jump");
  EXPECT_DOUBLE_EQ(p.model.mu(2.0), -2.0);
  EXPECT_DOUBLE_EQ(p.model.sigma(5.0), 0.5);
  EXPECT_NEAR(second_moment_target(p.model, 0.0), 0.25 + 0.09, 1e-10);
  EXPECT_NEAR(jump_moment(p.model, 4, 0.0), 3.0 * std::pow(0.3, 4), 1e-12);

  const auto q = make_preset("ou-jump", {{"theta", 2.0}, {"lambda", 0.0}});
  EXPECT_DOUBLE_EQ(q.model.mu(1.0), -2.0);
  ASSERT_TRUE(q.model.stationary_density().has_value());
  const double var = 0.25 / 4.0;
  EXPECT_NEAR((*q.model.stationary_density())(0.0), 1.0 / std::sqrt(2 * std::numbers::pi * var), 1e-12);

  const auto c = make_preset("cir-jump");
  EXPECT_DOUBLE_EQ(c.model.mu(1.5), 2.0 * (1.0 - 1.5));
  EXPECT_NEAR(c.model.sigma(4.0), 0.3 * 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.model.sigma(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(c.x0, 1.0);

  EXPECT_THROW(make_preset("ou-jump", {{"kappa", 1.0}}), ConfigError);
  EXPECT_THROW(make_preset("nope"), Error);
}

TEST(ModelPreset, OuJumpStationaryDensityByFourierInversion) {
  // Reference values: direct numerical inversion of the stationary
  // characteristic function in arbitrary precision.
  const auto p = make_preset("ou-jump");
  const auto& pdf = p.model.stationary_density();
  ASSERT_TRUE(pdf.has_value());
  EXPECT_NEAR((*pdf)(0.0), 0.989404143219806, 1e-12);
  EXPECT_NEAR((*pdf)(0.5), 0.451504352604061, 1e-12);
  EXPECT_NEAR((*pdf)(-0.5), 0.451504352604061, 1e-12);
  EXPECT_NEAR((*pdf)(2.0), 7.15644972726803e-5, 1e-12);
  EXPECT_FALSE(make_preset("ou-jump", {{"s", 0.0}}).model.stationary_density().has_value());
}
