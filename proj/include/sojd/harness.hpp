#pragma once

// Replicated experiments: consistency tables and standardized-error
// (normality) summaries for the kernel estimators, plus the checks that
// turn them into pass/fail verdicts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sojd/kernels.hpp"
#include "sojd/model.hpp"

namespace sojd::harness {

struct Rung {
  std::size_t n = 0;
  double delta = 0.0;
  std::optional<double> h;  // empty: delta^(2/11)

  double bandwidth() const;
  double hn_delta() const { return bandwidth() * static_cast<double>(n) * delta; }
  double hn_delta3() const { return hn_delta() * delta * delta; }
};

struct ExperimentConfig {
  std::string model = "ou-jump";
  std::map<std::string, double> params;  // preset overrides
  std::vector<Rung> ladder;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  std::vector<double> points{0.0};
  std::string kernel = "gaussian";
  std::size_t substeps = 10;    // fine steps per sampling step
  double burnin = 10.0;         // time units simulated before the first observation
  bool baseline = false;        // also evaluate the exact-data estimators
  bool common_paths = false;    // one fine path per replicate, observed at every rung
  std::vector<std::string> checks;
  double bias_tol = 0.15;
  std::string cache_dir;        // oracle density cache; empty disables caching
  unsigned threads = 0;         // 0: SOJD_THREADS or hardware concurrency

  /// Flat `key = value` text; '#' starts a comment. Throws ConfigError.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical text form; parse(to_text()) reproduces the config.
  std::string to_text() const;

  /// Rung conditions that do not hold (nΔ >= 50, hnΔ >= 10). Advisory.
  std::vector<std::string> warnings() const;

  Preset preset() const;
};

/// Density of X at x: the closed-form stationary density when the preset has
/// one, else a kernel estimate from one long seed-pinned run (T = 1e4,
/// fine step 1e-3, bandwidth 0.05), cached under `cache_dir` when set.
double oracle_density(const Preset& preset, double x, const std::string& cache_dir = {});

struct ReportRow {
  std::size_t rung = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double h = 0.0;
  double point = 0.0;
  std::string estimator;  // p, a, b, a0, b0, a_gap
  double target = 0.0;
  std::size_t reps = 0;    // replicates contributing
  std::size_t failed = 0;  // replicates lost to simulation failure or missing data
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // 1/R normalization
  double rmse = 0.0;
  double z_mean = 0.0;
  double z_variance = 0.0;  // 1/(R-1) normalization
  double z_skewness = 0.0;
  double z_excess_kurtosis = 0.0;
  double coverage = 0.0;  // share of plug-in 95% intervals covering the target
  std::string status;     // ok, skipped, failed

  double hn_delta() const { return h * static_cast<double>(n) * delta; }
  double hn_delta3() const { return hn_delta() * delta * delta; }
};

struct ZScore {
  std::size_t rung = 0;
  double point = 0.0;
  std::size_t replicate = 0;
  double z = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<ZScore> z_drift;
  std::vector<ZScore> z_second;
  double wall_seconds = 0.0;
  std::vector<std::string> notes;
};

/// Bias/RMSE tables (estimators p, a, b; with `baseline` also a0, b0 and
/// a_gap = |a - a0|).
ExperimentReport run_consistency(const ExperimentConfig& cfg);

/// Same replicates; z = sqrt(h n delta) (estimate - truth) / sqrt(V) with V
/// the asymptotic variance at the oracle density. Moments and coverage are
/// filled in; this is the same computation as run_consistency, which
/// already reports them.
ExperimentReport run_normality(const ExperimentConfig& cfg);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Evaluates named checks on report rows (ladder order = order of first
/// appearance of each rung):
///   consistency  RMSE of p, a, b strictly decreasing; final-rung |bias b| /
///                target <= bias_tol
///   normality    at the last rung of the leading run with hnΔ³ strictly
///                decreasing: z variance in [0.7, 1.3], |z mean| <= 0.15,
///                |excess kurtosis| <= 1, coverage in [0.90, 0.98], for a and
///                for b unless skipped
///   equal_rate   over the top two rungs the z variance of a and of b each
///                changes by at most a factor 3 and stays above 0.1
///   baseline     mean |a - a0| strictly decreasing
std::vector<CheckResult> evaluate_checks(const std::vector<ReportRow>& rows, const std::vector<std::string>& checks,
                                         double bias_tol = 0.15);

std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(std::string_view text);  // ConfigError on schema mismatch
std::string zscores_csv(const std::vector<ZScore>& z);
std::string summary_text(const std::vector<ReportRow>& rows, const std::vector<CheckResult>& checks);

/// Merges reports: concatenation, then a stable sort by (n, delta).
std::vector<ReportRow> summarize(const std::vector<std::vector<ReportRow>>& reports);

}  // namespace sojd::harness
