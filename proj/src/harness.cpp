#include "sojd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "sojd/errors.hpp"
#include "sojd/estimators.hpp"
#include "sojd/io.hpp"
#include "sojd/parallel.hpp"
#include "sojd/rng.hpp"
#include "sojd/simd/kernel_sums.hpp"
#include "sojd/simulator.hpp"

namespace sojd::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kOracleSeed = 0x0dd5eed5ULL;
constexpr double kOracleHorizon = 1e4;
constexpr double kOracleStep = 1e-3;
constexpr double kOracleBurnIn = 100.0;
constexpr std::size_t kOracleThin = 10;
constexpr double kOracleBandwidth = 0.05;
constexpr double kZ95 = 1.959963984540054;

const char* const kReportHeader =
    "rung,n,delta,h,point,estimator,target,reps,failed,mean,bias,variance,rmse,z_mean,z_variance,z_skewness,"
    "z_excess_kurtosis,coverage,status";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double number(const std::string& key, const std::string& v) {
  double d = 0.0;
  try {
    d = io::parse_double(v);
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
  if (!std::isfinite(d)) throw ConfigError("config key '" + key + "' must be finite");
  return d;
}

std::size_t count(const std::string& key, const std::string& v) {
  const double d = number(key, v);
  if (d < 0 || d != std::floor(d) || d > 1e15) throw ConfigError("config key '" + key + "' must be a whole number");
  return static_cast<std::size_t>(d);
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' must be true or false");
}

const std::set<std::string> kModelKeys{"theta", "s", "lambda", "eta", "kappa", "alpha"};
const std::set<std::string> kChecks{"consistency", "normality", "equal_rate", "baseline"};

// Per replicate, per point: point estimates and plug-in standard errors.
struct Sample {
  double p = kNaN, a = kNaN, b = kNaN, se_a = kNaN, se_b = kNaN, a0 = kNaN, b0 = kNaN;
  bool ok = false;
};

struct Moments {
  double mean = kNaN, variance = kNaN, rmse = kNaN;
};

Moments moments(const std::vector<double>& v, double target) {
  Moments m;
  if (v.empty()) return m;
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / n;
  double ss = 0.0, se = 0.0;
  for (double x : v) {
    ss += (x - m.mean) * (x - m.mean);
    se += (x - target) * (x - target);
  }
  m.variance = ss / n;
  m.rmse = std::sqrt(se / n);
  return m;
}

void z_moments(const std::vector<double>& z, ReportRow& row) {
  const double n = static_cast<double>(z.size());
  if (z.size() < 2) return;
  double s = 0.0;
  for (double v : z) s += v;
  const double mean = s / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : z) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  row.z_mean = mean;
  row.z_variance = m2 / (n - 1.0);
  const double c2 = m2 / n;
  row.z_skewness = c2 > 0 ? (m3 / n) / std::pow(c2, 1.5) : kNaN;
  row.z_excess_kurtosis = c2 > 0 ? (m4 / n) / (c2 * c2) - 3.0 : kNaN;
}

std::string cache_key(const Preset& preset, double x) {
  std::ostringstream os;
  os << preset.describe() << "|kde|T=" << io::format_double(kOracleHorizon) << "|dt=" << io::format_double(kOracleStep)
     << "|burn=" << io::format_double(kOracleBurnIn) << "|thin=" << kOracleThin
     << "|bw=" << io::format_double(kOracleBandwidth) << "|seed=" << kOracleSeed << "|x=" << io::format_double(x);
  return io::digest(os.str());
}

std::vector<double> long_run_samples(const Preset& preset) {
  const ModelSpec& model = preset.model;
  rng::Stream stream(rng::stream_key(kOracleSeed));
  double x = burn_in(model, preset.x0, kOracleStep, kOracleBurnIn, stream);
  const EulerScheme scheme(model, kOracleStep);
  EulerScheme::Shock shock;
  const auto steps = static_cast<std::size_t>(std::llround(kOracleHorizon / kOracleStep));
  std::vector<double> out;
  out.reserve(steps / kOracleThin);
  for (std::size_t k = 0; k < steps; ++k) {
    scheme.draw(stream, shock);
    x = scheme.advance(x, shock);
    if (!std::isfinite(x)) {
      throw ExplosionError(static_cast<double>(k + 1) * kOracleStep, "oracle density run exploded");
    }
    if ((k + 1) % kOracleThin == 0) out.push_back(x);
  }
  return out;
}

}  // namespace

double Rung::bandwidth() const { return h ? *h : default_bandwidth(delta); }

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    if (key == "model") {
      c.model = value;
    } else if (kModelKeys.count(key)) {
      c.params[key] = number(key, value);
    } else if (key == "ladder") {
      c.ladder.clear();
      for (const std::string& item : split(value, ';')) {
        if (item.empty()) continue;
        const auto parts = split(item, ':');
        if (parts.size() != 3) throw ConfigError("ladder rung '" + item + "' must be n:delta:h");
        Rung r;
        r.n = count("ladder", parts[0]);
        r.delta = number("ladder", parts[1]);
        if (parts[2] != "auto") r.h = number("ladder", parts[2]);
        c.ladder.push_back(r);
      }
    } else if (key == "reps") {
      c.reps = count(key, value);
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(count(key, value));
    } else if (key == "points") {
      c.points.clear();
      for (const std::string& p : split(value, ',')) c.points.push_back(number(key, p));
    } else if (key == "kernel") {
      c.kernel = value;
    } else if (key == "substeps") {
      c.substeps = count(key, value);
    } else if (key == "burnin") {
      c.burnin = number(key, value);
    } else if (key == "baseline") {
      c.baseline = boolean(key, value);
    } else if (key == "common_paths") {
      c.common_paths = boolean(key, value);
    } else if (key == "checks") {
      c.checks.clear();
      for (const std::string& ch : split(value, ',')) {
        if (ch.empty()) continue;
        if (!kChecks.count(ch)) {
          throw ConfigError("unknown check '" + ch + "' (known: consistency, normality, equal_rate, baseline)");
        }
        c.checks.push_back(ch);
      }
    } else if (key == "bias_tol") {
      c.bias_tol = number(key, value);
    } else if (key == "cache_dir") {
      c.cache_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  if (c.ladder.empty()) throw ConfigError("config needs a ladder = n:delta:h;... entry");
  for (const Rung& r : c.ladder) {
    if (r.n < 1) throw ConfigError("ladder rung needs n >= 1");
    if (!(r.delta > 0.0)) throw ConfigError("ladder rung needs delta > 0");
    if (r.h && !(*r.h > 0.0)) throw ConfigError("ladder bandwidth must be positive or 'auto'");
    if (!r.h && !(r.delta < 1.0)) throw ConfigError("h = auto (delta^(2/11)) needs delta < 1");
  }
  if (c.reps < 2) throw ConfigError("reps must be at least 2");
  if (c.points.empty()) throw ConfigError("points must list at least one evaluation point");
  if (c.substeps < 1) throw ConfigError("substeps must be at least 1");
  if (!(c.burnin >= 0.0)) throw ConfigError("burnin must be nonnegative");
  if (!(c.bias_tol > 0.0)) throw ConfigError("bias_tol must be positive");
  if (std::find(c.checks.begin(), c.checks.end(), "baseline") != c.checks.end() && !c.baseline) {
    throw ConfigError("check 'baseline' needs baseline = true");
  }
  Kernel::by_name(c.kernel);  // validates the name
  c.preset();                 // validates model and parameters
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  try {
    return parse(io::read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "model = " << model << "\n";
  for (const auto& [k, v] : params) os << k << " = " << io::format_double(v) << "\n";
  os << "ladder = ";
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (i) os << ";";
    os << ladder[i].n << ":" << io::format_double(ladder[i].delta) << ":"
       << (ladder[i].h ? io::format_double(*ladder[i].h) : std::string("auto"));
  }
  os << "\nreps = " << reps << "\nseed = " << seed << "\npoints = ";
  for (std::size_t i = 0; i < points.size(); ++i) os << (i ? "," : "") << io::format_double(points[i]);
  os << "\nkernel = " << kernel << "\nsubsteps = " << substeps << "\nburnin = " << io::format_double(burnin)
     << "\nbaseline = " << (baseline ? "true" : "false") << "\ncommon_paths = " << (common_paths ? "true" : "false")
     << "\nchecks = ";
  for (std::size_t i = 0; i < checks.size(); ++i) os << (i ? "," : "") << checks[i];
  os << "\nbias_tol = " << io::format_double(bias_tol) << "\n";
  if (!cache_dir.empty()) os << "cache_dir = " << cache_dir << "\n";
  return os.str();
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const Rung& r = ladder[i];
    const double t = static_cast<double>(r.n) * r.delta;
    if (t < 50.0) {
      out.push_back("rung " + std::to_string(i) + ": n*delta = " + io::format_double(t) + " < 50");
    }
    if (r.hn_delta() < 10.0) {
      out.push_back("rung " + std::to_string(i) + ": h*n*delta = " + io::format_double(r.hn_delta()) + " < 10");
    }
  }
  return out;
}

Preset ExperimentConfig::preset() const { return make_preset(model, params); }

double oracle_density(const Preset& preset, double x, const std::string& cache_dir) {
  if (const auto& pdf = preset.model.stationary_density()) return (*pdf)(x);
  fs::path file;
  if (!cache_dir.empty()) {
    file = fs::path(cache_dir) / ("density-" + cache_key(preset, x) + ".txt");
    std::error_code ec;
    if (fs::exists(file, ec)) {
      const double v = io::parse_double(trim(io::read_file(file)));
      if (std::isfinite(v) && v >= 0.0) return v;
    }
  }
  const std::vector<double> samples = long_run_samples(preset);
  const std::vector<double> zeros(samples.size(), 0.0);
  const auto sums = simd::gaussian_sums(samples, zeros, zeros, x, kOracleBandwidth);
  const double p = sums.w / (static_cast<double>(samples.size()) * kOracleBandwidth);
  if (!file.empty()) io::write_atomic(file, io::format_double(p) + "\n");
  return p;
}

namespace {

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Preset preset = cfg.preset();
  const ModelSpec& model = preset.model;
  const Kernel kernel = Kernel::by_name(cfg.kernel);
  const std::size_t R = cfg.reps;
  const std::size_t P = cfg.points.size();
  const std::size_t L = cfg.ladder.size();
  const unsigned threads = resolve_threads(cfg.threads);

  ExperimentReport rep;
  rep.notes = cfg.warnings();

  std::vector<double> truth_a(P), truth_b(P), c4(P), p_true(P);
  for (std::size_t j = 0; j < P; ++j) {
    const double x = cfg.points[j];
    truth_a[j] = model.mu(x);
    truth_b[j] = second_moment_target(model, x);
    c4[j] = jump_moment(model, 4, x);
    p_true[j] = oracle_density(preset, x, cfg.cache_dir);
    if (!(p_true[j] > 0.0)) throw NumericError("oracle density at x = " + io::format_double(x) + " is zero");
  }

  // samples[(rung * R + rep) * P + point]
  std::vector<Sample> samples(L * R * P);

  auto evaluate = [&](std::size_t r, std::size_t k, const ObservationSet& obs) {
    const Rung& rung = cfg.ladder[r];
    const double h = rung.bandwidth();
    const NwDesign design = NwDesign::from_tilde(obs);
    const double scale = std::sqrt(h * static_cast<double>(design.n()) * obs.delta);
    std::optional<NwDesign> exact;
    if (cfg.baseline) {
      exact = NwDesign::from_exact(std::span<const double>(obs.x_true).subspan(1, rung.n + 1), obs.delta);
    }
    for (std::size_t j = 0; j < P; ++j) {
      Sample& s = samples[(r * R + k) * P + j];
      try {
        const PointEstimate e = nw_point(design, kernel, h, cfg.points[j]);
        s.p = e.p;
        s.a = e.a;
        s.b = e.b;
        s.se_a = std::sqrt(kernel.k2() * e.b / e.p) / scale;
        s.se_b = std::sqrt(kernel.k2() * c4[j] / e.p) / scale;
        if (exact) {
          const PointEstimate e0 = nw_point(*exact, kernel, h, cfg.points[j]);
          s.a0 = e0.a;
          s.b0 = e0.b;
        }
        s.ok = true;
      } catch (const NoDataNearPointError&) {
        s = Sample{};
      }
    }
  };

  if (cfg.common_paths) {
    double min_delta = cfg.ladder[0].delta, horizon = 0.0;
    for (const Rung& r : cfg.ladder) {
      min_delta = std::min(min_delta, r.delta);
      horizon = std::max(horizon, static_cast<double>(r.n + 2) * r.delta);
    }
    const double dt = min_delta / static_cast<double>(cfg.substeps);
    for (const Rung& r : cfg.ladder) steps_per_sample(r.delta, dt);
    parallel_for(R, threads, [&](std::size_t k) {
      rng::Stream stream(rng::stream_key(cfg.seed, 0, k));
      try {
        const double xb = burn_in(model, preset.x0, dt, cfg.burnin, stream);
        const FinePath path = simulate_path(model, SimConfig(dt, horizon, xb, 0.0), stream);
        for (std::size_t r = 0; r < L; ++r) {
          const Rung& rung = cfg.ladder[r];
          ObservationSet full = observe(path, rung.delta);
          full.y_obs.resize(rung.n + 3);
          full.x_true.resize(rung.n + 3);
          evaluate(r, k, ObservationSet::from_integrated(rung.delta, std::move(full.y_obs), std::move(full.x_true)));
        }
      } catch (const ExplosionError&) {
        for (std::size_t r = 0; r < L; ++r)
          for (std::size_t j = 0; j < P; ++j) samples[(r * R + k) * P + j] = Sample{};
      }
    });
  } else {
    parallel_for(L * R, threads, [&](std::size_t idx) {
      const std::size_t r = idx / R, k = idx % R;
      const Rung& rung = cfg.ladder[r];
      const double dt = rung.delta / static_cast<double>(cfg.substeps);
      rng::Stream stream(rng::stream_key(cfg.seed, r + 1, k));
      try {
        const double xb = burn_in(model, preset.x0, dt, cfg.burnin, stream);
        const SimConfig sim(dt, static_cast<double>(rung.n + 2) * rung.delta, xb, 0.0);
        evaluate(r, k, simulate_observations(model, sim, rung.delta, stream));
      } catch (const ExplosionError&) {
        for (std::size_t j = 0; j < P; ++j) samples[(r * R + k) * P + j] = Sample{};
      }
    });
  }

  for (std::size_t r = 0; r < L; ++r) {
    const Rung& rung = cfg.ladder[r];
    const double h = rung.bandwidth();
    const double scale = std::sqrt(rung.hn_delta());
    for (std::size_t j = 0; j < P; ++j) {
      std::vector<double> vp, va, vb, va0, vb0, vgap, za, zb;
      std::size_t cover_a = 0, cover_b = 0;
      const double var_a = asymptotic_variance(model, kernel, cfg.points[j], Coefficient::drift, p_true[j]);
      const double var_b = asymptotic_variance(model, kernel, cfg.points[j], Coefficient::second, p_true[j]);
      for (std::size_t k = 0; k < R; ++k) {
        const Sample& s = samples[(r * R + k) * P + j];
        if (!s.ok) continue;
        vp.push_back(s.p);
        va.push_back(s.a);
        vb.push_back(s.b);
        const double za_k = scale * (s.a - truth_a[j]) / std::sqrt(var_a);
        za.push_back(za_k);
        rep.z_drift.push_back({r, cfg.points[j], k, za_k});
        if (std::abs(s.a - truth_a[j]) <= kZ95 * s.se_a) ++cover_a;
        if (var_b > 0.0) {
          const double zb_k = scale * (s.b - truth_b[j]) / std::sqrt(var_b);
          zb.push_back(zb_k);
          rep.z_second.push_back({r, cfg.points[j], k, zb_k});
          if (std::abs(s.b - truth_b[j]) <= kZ95 * s.se_b) ++cover_b;
        }
        if (cfg.baseline) {
          va0.push_back(s.a0);
          vb0.push_back(s.b0);
          vgap.push_back(std::abs(s.a - s.a0));
        }
      }
      const std::size_t ok = vp.size();
      const std::size_t failed = R - ok;
      const bool invalid = 100 * failed > R;
      auto row = [&](const std::string& name, const std::vector<double>& v, double target) {
        ReportRow out;
        out.rung = r;
        out.n = rung.n;
        out.delta = rung.delta;
        out.h = h;
        out.point = cfg.points[j];
        out.estimator = name;
        out.target = target;
        out.reps = ok;
        out.failed = failed;
        const Moments m = moments(v, target);
        out.mean = m.mean;
        out.bias = m.mean - target;
        out.variance = m.variance;
        out.rmse = m.rmse;
        out.z_mean = out.z_variance = out.z_skewness = out.z_excess_kurtosis = out.coverage = kNaN;
        out.status = invalid ? "failed" : "ok";
        return out;
      };
      rep.rows.push_back(row("p", vp, p_true[j]));
      ReportRow ra = row("a", va, truth_a[j]);
      z_moments(za, ra);
      ra.coverage = ok ? static_cast<double>(cover_a) / static_cast<double>(ok) : kNaN;
      rep.rows.push_back(ra);
      ReportRow rb = row("b", vb, truth_b[j]);
      if (var_b > 0.0) {
        z_moments(zb, rb);
        rb.coverage = ok ? static_cast<double>(cover_b) / static_cast<double>(ok) : kNaN;
      } else if (!invalid) {
        rb.status = "skipped";
        rep.notes.push_back("rung " + std::to_string(r) + ", x = " + io::format_double(cfg.points[j]) +
                            ": second-moment normality skipped (integral of c^4 f is zero)");
      }
      rep.rows.push_back(rb);
      if (cfg.baseline) {
        rep.rows.push_back(row("a0", va0, truth_a[j]));
        rep.rows.push_back(row("b0", vb0, truth_b[j]));
        rep.rows.push_back(row("a_gap", vgap, 0.0));
      }
      if (invalid) {
        rep.notes.push_back("rung " + std::to_string(r) + ", x = " + io::format_double(cfg.points[j]) + ": " +
                            std::to_string(failed) + " of " + std::to_string(R) + " replicates failed; rung invalid");
      }
    }
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace

ExperimentReport run_consistency(const ExperimentConfig& cfg) { return run_experiment(cfg); }

ExperimentReport run_normality(const ExperimentConfig& cfg) { return run_experiment(cfg); }

namespace {

struct Series {
  std::vector<std::size_t> rungs;  // ladder order
  std::map<std::size_t, const ReportRow*> at;
};

// Rows of one (point, estimator), keyed by rung in ladder order.
std::map<std::pair<double, std::string>, Series> index_rows(const std::vector<ReportRow>& rows) {
  std::map<std::pair<double, std::string>, Series> out;
  for (const ReportRow& r : rows) {
    Series& s = out[{r.point, r.estimator}];
    if (!s.at.count(r.rung)) s.rungs.push_back(r.rung);
    s.at[r.rung] = &r;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::vector<CheckResult> evaluate_checks(const std::vector<ReportRow>& rows, const std::vector<std::string>& checks,
                                         double bias_tol) {
  const auto idx = index_rows(rows);
  std::set<double> points;
  for (const ReportRow& r : rows) points.insert(r.point);
  std::vector<CheckResult> out;

  auto series = [&](double x, const std::string& est) -> const Series* {
    const auto it = idx.find({x, est});
    return it == idx.end() ? nullptr : &it->second;
  };
  auto any_failed = [&](const Series& s) {
    for (const auto& [k, row] : s.at)
      if (row->status == "failed") return true;
    return false;
  };

  for (const std::string& check : checks) {
    if (!kChecks.count(check)) {
      throw ConfigError("unknown check '" + check + "' (known: consistency, normality, equal_rate, baseline)");
    }
  }
  for (const std::string& check : checks) {
    CheckResult res{check, true, ""};
    std::ostringstream detail;
    auto fail = [&](const std::string& why) {
      res.pass = false;
      detail << why << "; ";
    };
    for (double x : points) {
      const std::string at = "x=" + fmt(x) + " ";
      if (check == "consistency" || check == "baseline") {
        const std::vector<std::string> ests =
            check == "consistency" ? std::vector<std::string>{"p", "a", "b"} : std::vector<std::string>{"a_gap"};
        for (const std::string& est : ests) {
          const Series* s = series(x, est);
          if (!s) {
            fail(at + est + ": no rows");
            continue;
          }
          if (any_failed(*s)) fail(at + est + ": a rung is invalid");
          const char* what = check == "consistency" ? "rmse" : "mean";
          detail << at << est << " " << what << ":";
          for (std::size_t i = 0; i < s->rungs.size(); ++i) {
            const ReportRow* row = s->at.at(s->rungs[i]);
            const double v = check == "consistency" ? row->rmse : row->mean;
            detail << " " << fmt(v);
            if (i > 0) {
              const ReportRow* prev = s->at.at(s->rungs[i - 1]);
              const double pv = check == "consistency" ? prev->rmse : prev->mean;
              if (!(v < pv)) res.pass = false;
            }
          }
          detail << "; ";
        }
        if (check == "consistency") {
          const Series* s = series(x, "b");
          if (s && !s->rungs.empty()) {
            const ReportRow* last = s->at.at(s->rungs.back());
            const double rel = std::abs(last->bias) / std::abs(last->target);
            detail << at << "final b relative bias " << fmt(rel) << " (tol " << fmt(bias_tol) << "); ";
            if (!(rel <= bias_tol)) res.pass = false;
          }
        }
      } else if (check == "normality") {
        for (const std::string est : {"a", "b"}) {
          const Series* s = series(x, est);
          if (!s || s->rungs.empty()) {
            fail(at + est + ": no rows");
            continue;
          }
          std::size_t pick = 0;
          while (pick + 1 < s->rungs.size() &&
                 s->at.at(s->rungs[pick + 1])->hn_delta3() < s->at.at(s->rungs[pick])->hn_delta3()) {
            ++pick;
          }
          const ReportRow* row = s->at.at(s->rungs[pick]);
          if (row->status == "skipped") {
            detail << at << est << ": skipped (degenerate variance); ";
            continue;
          }
          if (row->status == "failed") fail(at + est + ": rung invalid");
          detail << at << est << " rung " << row->rung << ": var " << fmt(row->z_variance) << " mean "
                 << fmt(row->z_mean) << " kurt " << fmt(row->z_excess_kurtosis) << " cover " << fmt(row->coverage)
                 << "; ";
          const bool ok = row->z_variance >= 0.7 && row->z_variance <= 1.3 && std::abs(row->z_mean) <= 0.15 &&
                          std::abs(row->z_excess_kurtosis) <= 1.0 && row->coverage >= 0.90 && row->coverage <= 0.98;
          if (!ok) res.pass = false;
        }
      } else if (check == "equal_rate") {
        for (const std::string est : {"a", "b"}) {
          const Series* s = series(x, est);
          if (!s || s->rungs.size() < 2) {
            fail(at + est + ": needs two rungs");
            continue;
          }
          const ReportRow* top = s->at.at(s->rungs.back());
          const ReportRow* prev = s->at.at(s->rungs[s->rungs.size() - 2]);
          if (top->status == "skipped") {
            detail << at << est << ": skipped; ";
            continue;
          }
          const double ratio = top->z_variance / prev->z_variance;
          detail << at << est << " z var " << fmt(prev->z_variance) << " -> " << fmt(top->z_variance) << "; ";
          if (!(top->z_variance >= 0.1 && ratio >= 1.0 / 3.0 && ratio <= 3.0)) res.pass = false;
          if (top->status == "failed" || prev->status == "failed") fail(at + est + ": rung invalid");
        }
      } else {
        fail("unknown check");
      }
    }
    res.detail = detail.str();
    if (res.detail.size() >= 2) res.detail.resize(res.detail.size() - 2);
    out.push_back(res);
  }
  return out;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const ReportRow& r : rows) {
    const double nums[] = {r.target, r.mean, r.bias, r.variance, r.rmse, r.z_mean, r.z_variance,
                           r.z_skewness, r.z_excess_kurtosis, r.coverage};
    out += std::to_string(r.rung) + "," + std::to_string(r.n) + "," + io::format_double(r.delta) + "," +
           io::format_double(r.h) + "," + io::format_double(r.point) + "," + r.estimator;
    out += "," + io::format_double(nums[0]) + "," + std::to_string(r.reps) + "," + std::to_string(r.failed);
    for (std::size_t i = 1; i < std::size(nums); ++i) out += "," + io::format_double(nums[i]);
    out += "," + r.status + "\n";
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  const io::CsvTable t = io::parse_csv(text);
  std::string header;
  for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != kReportHeader) throw ConfigError("report schema mismatch: header '" + header + "'");
  std::vector<ReportRow> rows;
  for (const auto& f : t.rows) {
    ReportRow r;
    auto whole = [](const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); };
    r.rung = whole(f[0]);
    r.n = whole(f[1]);
    r.delta = io::parse_double(f[2]);
    r.h = io::parse_double(f[3]);
    r.point = io::parse_double(f[4]);
    r.estimator = f[5];
    r.target = io::parse_double(f[6]);
    r.reps = whole(f[7]);
    r.failed = whole(f[8]);
    r.mean = io::parse_double(f[9]);
    r.bias = io::parse_double(f[10]);
    r.variance = io::parse_double(f[11]);
    r.rmse = io::parse_double(f[12]);
    r.z_mean = io::parse_double(f[13]);
    r.z_variance = io::parse_double(f[14]);
    r.z_skewness = io::parse_double(f[15]);
    r.z_excess_kurtosis = io::parse_double(f[16]);
    r.coverage = io::parse_double(f[17]);
    r.status = f[18];
    rows.push_back(r);
  }
  return rows;
}

std::string zscores_csv(const std::vector<ZScore>& z) {
  std::string out = "rung,point,replicate,z\n";
  for (const ZScore& s : z) {
    out += std::to_string(s.rung) + "," + io::format_double(s.point) + "," + std::to_string(s.replicate) + "," +
           io::format_double(s.z) + "\n";
  }
  return out;
}

std::string summary_text(const std::vector<ReportRow>& rows, const std::vector<CheckResult>& checks) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%4s %7s %8s %7s %7s %-6s %10s %11s %11s %11s %8s %8s %7s %s\n", "rung", "n",
                "delta", "h", "x", "est", "target", "mean", "bias", "rmse", "z_var", "z_mean", "cover", "status");
  os << line;
  for (const ReportRow& r : rows) {
    std::snprintf(line, sizeof line, "%4zu %7zu %8.4g %7.4g %7.3g %-6s %10.5g %11.5g %11.4g %11.4g %8.4g %8.4g %7.4g %s\n",
                  r.rung, r.n, r.delta, r.h, r.point, r.estimator.c_str(), r.target, r.mean, r.bias, r.rmse,
                  r.z_variance, r.z_mean, r.coverage, r.status.c_str());
    os << line;
  }
  if (!checks.empty()) {
    os << "\nchecks:\n";
    for (const CheckResult& c : checks) os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  }
  return os.str();
}

std::vector<ReportRow> summarize(const std::vector<std::vector<ReportRow>>& reports) {
  if (reports.empty()) throw ArgumentError("summarize needs at least one report");
  if (reports.size() == 1) return reports.front();
  // Rung ids are renumbered so rungs from different reports stay distinct.
  std::vector<ReportRow> all;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (ReportRow r : reports[i]) {
      const auto key = std::make_pair(i, r.rung);
      if (!ids.count(key)) ids[key] = ids.size();
      r.rung = ids[key];
      all.push_back(std::move(r));
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.n != b.n) return a.n < b.n;
    return a.delta < b.delta;
  });
  return all;
}

}  // namespace sojd::harness
