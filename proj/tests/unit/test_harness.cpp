#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "sojd/errors.hpp"
#include "sojd/harness.hpp"
#include "sojd/io.hpp"

using namespace sojd;
using namespace sojd::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& extra = "") {
  return ExperimentConfig::parse(
      "model = ou-jump\n"
      "ladder = 200:0.02:auto; 400:0.02:0.3\n"
      "reps = 24\n"
      "seed = 9\n"
      "points = 0, 0.4\n"
      "burnin = 2\n" +
      extra);
}

const ReportRow& find_row(const std::vector<ReportRow>& rows, std::size_t rung, double point, const std::string& est) {
  for (const auto& r : rows)
    if (r.rung == rung && r.point == point && r.estimator == est) return r;
  throw std::runtime_error("row not found");
}

ReportRow row(std::size_t rung, std::size_t n, double delta, double h, const std::string& est) {
  ReportRow r;
  r.rung = rung;
  r.n = n;
  r.delta = delta;
  r.h = h;
  r.estimator = est;
  r.reps = 100;
  r.status = "ok";
  return r;
}

}  // namespace

TEST(HarnessConfig, ParsesAndRoundTrips) {
  const ExperimentConfig c = small_config("theta = 2 # faster\nchecks = consistency,normality\n");
  ASSERT_EQ(c.ladder.size(), 2u);
  EXPECT_FALSE(c.ladder[0].h.has_value());
  EXPECT_DOUBLE_EQ(*c.ladder[1].h, 0.3);
  EXPECT_EQ(c.points, (std::vector<double>{0.0, 0.4}));
  EXPECT_EQ(c.params.at("theta"), 2.0);
  const ExperimentConfig again = ExperimentConfig::parse(c.to_text());
  EXPECT_EQ(again.to_text(), c.to_text());
}

TEST(HarnessConfig, RejectsMalformedInput) {
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nfoo = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nreps = 5\nreps = 6\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:-0.1:auto\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:-2\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("reps = 5\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nchecks = baseline\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nmodel = nope\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nkernel = box\n"), Error);
  EXPECT_THROW(ExperimentConfig::parse("ladder = 10:0.1:auto\nno equals sign\n"), ConfigError);
}

TEST(HarnessConfig, WarnsOnShortRungs) {
  const auto w = small_config().warnings();
  EXPECT_FALSE(w.empty());
  EXPECT_TRUE(ExperimentConfig::parse("ladder = 100000:0.01:auto\n").warnings().empty());
}

TEST(Harness, ResultsDoNotDependOnThreads) {
  for (const char* extra : {"", "common_paths = true\nbaseline = true\n"}) {
    ExperimentConfig c = small_config(extra);
    c.threads = 1;
    const auto one = run_consistency(c);
    c.threads = 3;
    const auto three = run_consistency(c);
    EXPECT_EQ(report_csv(one.rows), report_csv(three.rows));
    EXPECT_EQ(zscores_csv(one.z_drift), zscores_csv(three.z_drift));
    EXPECT_EQ(zscores_csv(one.z_second), zscores_csv(three.z_second));
  }
}

TEST(Harness, NormalityIsTheSameComputation) {
  const ExperimentConfig c = small_config();
  EXPECT_EQ(report_csv(run_consistency(c).rows), report_csv(run_normality(c).rows));
}

TEST(Harness, RmseDecomposesIntoBiasAndVariance) {
  const auto rep = run_consistency(small_config("baseline = true\n"));
  ASSERT_FALSE(rep.rows.empty());
  for (const auto& r : rep.rows) {
    if (r.status != "ok") continue;
    EXPECT_NEAR(r.rmse * r.rmse, r.bias * r.bias + r.variance, 1e-12 * (1.0 + r.rmse * r.rmse)) << r.estimator;
    EXPECT_NEAR(r.bias, r.mean - r.target, 1e-15 * (1.0 + std::abs(r.mean)));
  }
}

TEST(Harness, RowsAndZScoresHaveExpectedShape) {
  const ExperimentConfig c = small_config("baseline = true\n");
  const auto rep = run_consistency(c);
  // 2 rungs x 2 points x {p, a, b, a0, b0, a_gap}
  EXPECT_EQ(rep.rows.size(), 24u);
  EXPECT_EQ(rep.z_drift.size(), 2u * 2u * c.reps);
  const ReportRow& a = find_row(rep.rows, 0, 0.4, "a");
  EXPECT_DOUBLE_EQ(a.target, -0.4);
  EXPECT_DOUBLE_EQ(find_row(rep.rows, 1, 0.0, "b").target, 0.34);
  EXPECT_GE(a.coverage, 0.0);
  EXPECT_LE(a.coverage, 1.0);
  EXPECT_EQ(a.reps + a.failed, c.reps);
}

TEST(Harness, SecondMomentSkippedWithoutJumps) {
  const auto rep = run_consistency(small_config("lambda = 0\n"));
  EXPECT_EQ(find_row(rep.rows, 0, 0.0, "b").status, "skipped");
  EXPECT_EQ(find_row(rep.rows, 0, 0.0, "a").status, "ok");
  EXPECT_TRUE(rep.z_second.empty());
}

TEST(Harness, DegenerateModelGivesZeros) {
  // X stays at 0: every quotient is 0, so drift and second-moment estimates vanish.
  const auto rep = run_consistency(ExperimentConfig::parse(
      "model = ou-jump\ns = 0\nlambda = 0\nladder = 50:0.05:auto\nreps = 4\npoints = 0\n"));
  for (const char* est : {"a", "b"}) {
    const ReportRow& r = find_row(rep.rows, 0, 0.0, est);
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_EQ(r.rmse, 0.0);
    EXPECT_EQ(r.failed, 0u);
  }
}

TEST(Harness, ReportCsvRoundTrip) {
  const auto rows = run_consistency(small_config("baseline = true\n")).rows;
  const std::string csv = report_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "rung,n,delta,h,point,estimator,target,reps,failed,mean,bias,variance,rmse,z_mean,z_variance,"
            "z_skewness,z_excess_kurtosis,coverage,status");
  EXPECT_EQ(report_csv(parse_report_csv(csv)), csv);
  EXPECT_THROW(parse_report_csv("rung,n\n0,1\n"), ConfigError);
}

TEST(Harness, SummarizeSingleReportIsIdentity) {
  const auto rows = run_consistency(small_config()).rows;
  EXPECT_EQ(report_csv(summarize({rows})), report_csv(rows));
}

TEST(Harness, SummarizeMergesLaddersInOrder) {
  std::vector<ReportRow> coarse{row(0, 4000, 0.01, 0.4, "a"), row(1, 8000, 0.01, 0.4, "a")};
  std::vector<ReportRow> fine{row(0, 500, 0.01, 0.4, "a"), row(1, 2000, 0.01, 0.4, "a")};
  const auto merged = summarize({coarse, fine});
  ASSERT_EQ(merged.size(), 4u);
  EXPECT_EQ(merged[0].n, 500u);
  EXPECT_EQ(merged[1].n, 2000u);
  EXPECT_EQ(merged[2].n, 4000u);
  EXPECT_EQ(merged[3].n, 8000u);
  // Rungs stay distinct after the merge.
  for (std::size_t i = 1; i < merged.size(); ++i) EXPECT_NE(merged[i].rung, merged[i - 1].rung);
}

TEST(HarnessChecks, Consistency) {
  std::vector<ReportRow> rows;
  const double rmse[3][3] = {{0.3, 0.2, 0.1}, {0.2, 0.1, 0.05}, {0.1, 0.05, 0.02}};
  const char* names[3] = {"p", "a", "b"};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t e = 0; e < 3; ++e) {
      ReportRow r = row(k, 500u << (2 * k), 0.01, 0.43, names[e]);
      r.rmse = rmse[e][k];
      r.target = 0.34;
      r.bias = e == 2 ? 0.01 : 0.0;
      rows.push_back(r);
    }
  }
  EXPECT_TRUE(evaluate_checks(rows, {"consistency"}).front().pass);
  EXPECT_FALSE(evaluate_checks(rows, {"consistency"}, 0.01).front().pass);  // 0.01 / 0.34 > 0.01
  rows[3].rmse = 0.3;  // p: 0.3 -> 0.3 is not strictly decreasing
  EXPECT_FALSE(evaluate_checks(rows, {"consistency"}).front().pass);
}

TEST(HarnessChecks, NormalityUsesLastRungOfShrinkingRun) {
  std::vector<ReportRow> rows;
  // hnΔ³ shrinks over rungs 0 -> 1 and grows at rung 2, so rung 1 is judged.
  const std::size_t n[3] = {8000, 20000, 400000};
  const double delta[3] = {0.005, 0.005, 0.005}, h[3] = {0.38, 0.1, 0.38};
  const double zvar[3] = {5.0, 1.0, 5.0};
  for (std::size_t k = 0; k < 3; ++k) {
    for (const char* e : {"a", "b"}) {
      ReportRow r = row(k, n[k], delta[k], h[k], e);
      r.z_variance = zvar[k];
      r.z_mean = 0.05;
      r.z_excess_kurtosis = 0.2;
      r.coverage = 0.95;
      rows.push_back(r);
    }
  }
  EXPECT_TRUE(evaluate_checks(rows, {"normality"}).front().pass);
  rows[3].coverage = 0.85;  // rung 1, b
  EXPECT_FALSE(evaluate_checks(rows, {"normality"}).front().pass);
  rows[3].coverage = 0.95;
  rows[3].status = "skipped";
  rows[3].z_variance = std::nan("");
  EXPECT_TRUE(evaluate_checks(rows, {"normality"}).front().pass);
}

TEST(HarnessChecks, EqualRateAndBaseline) {
  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < 2; ++k) {
    ReportRow a = row(k, 1000 * (k + 1), 0.01, 0.4, "a");
    a.z_variance = k ? 1.2 : 0.9;
    ReportRow b = row(k, 1000 * (k + 1), 0.01, 0.4, "b");
    b.z_variance = k ? 2.0 : 1.0;
    ReportRow g = row(k, 1000 * (k + 1), 0.01, 0.4, "a_gap");
    g.mean = k ? 0.01 : 0.02;
    rows.insert(rows.end(), {a, b, g});
  }
  const auto c = evaluate_checks(rows, {"equal_rate", "baseline"});
  EXPECT_TRUE(c[0].pass);
  EXPECT_TRUE(c[1].pass);
  rows[4].z_variance = 4.0;  // b: 1 -> 4 exceeds the factor 3
  rows[5].mean = 0.03;
  const auto d = evaluate_checks(rows, {"equal_rate", "baseline"});
  EXPECT_FALSE(d[0].pass);
  EXPECT_FALSE(d[1].pass);
  EXPECT_THROW(evaluate_checks(rows, {"nope"}), ConfigError);
}

TEST(HarnessOracle, ClosedFormDensityWhenAvailable) {
  const Preset ou = make_preset("ou-jump", {{"lambda", 0.0}});
  const double var = 0.25 / 2.0;
  EXPECT_DOUBLE_EQ(oracle_density(ou, 0.3), std::exp(-0.045 / var) / std::sqrt(2.0 * std::numbers::pi * var));
  EXPECT_NEAR(oracle_density(make_preset("ou-jump"), 0.0), 0.989404143219806, 1e-12);
}

TEST(HarnessOracle, LongRunEstimateAndCache) {
  // Same dynamics as the default ou-jump preset but without a known density,
  // so the long-run kernel estimate is used. Reference: the exact stationary
  // density smoothed with a N(0, 0.05^2) kernel, by Fourier inversion.
  const Preset base = make_preset("ou-jump");
  Preset p = base;
  p.name = "ou-jump-nodensity";
  p.model = ModelSpec("ou-jump-nodensity", ScalarField{"-x", [](double x) { return -x; }, 100},
                      ScalarField{"0.5", [](double) { return 0.5; }, 100}, JumpField::identity(),
                      base.model.levy(), Interval{}, std::nullopt, base.model.assumptions());
  const fs::path dir = fs::temp_directory_path() / "sojd-oracle-cache";
  fs::remove_all(dir);
  const double v = oracle_density(p, 0.0, dir.string());
  EXPECT_NEAR(v, 0.981600022863209, 0.04);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    io::write_atomic(e.path(), "0.5\n");  // the cached value is used from now on
  }
  EXPECT_EQ(files, 1u);
  EXPECT_EQ(oracle_density(p, 0.0, dir.string()), 0.5);
}
