// Command-line front end: simulate, estimate, verify, experiment,
// summarize, replay.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sojd/errors.hpp"
#include "sojd/estimators.hpp"
#include "sojd/generator.hpp"
#include "sojd/harness.hpp"
#include "sojd/io.hpp"
#include "sojd/kernels.hpp"
#include "sojd/model.hpp"
#include "sojd/parallel.hpp"
#include "sojd/simd/kernel_sums.hpp"
#include "sojd/simulator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumeric = 2;
constexpr int kCheckFailed = 3;

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ModelArgs {
  std::string name = "ou-jump";
  std::map<std::string, std::optional<double>> params{{"theta", {}}, {"s", {}},     {"lambda", {}},
                                                      {"eta", {}},   {"kappa", {}}, {"alpha", {}}};

  void add(CLI::App* app) {
    app->add_option("--model", name, "Model preset: ou-jump | cir-jump")->capture_default_str();
    app->add_option("--theta", params["theta"], "ou-jump mean-reversion rate (1/time)");
    app->add_option("--s", params["s"], "diffusion scale (state/sqrt(time))");
    app->add_option("--lambda", params["lambda"], "jump intensity (jumps per unit time)");
    app->add_option("--eta", params["eta"], "jump-size standard deviation (state units)");
    app->add_option("--kappa", params["kappa"], "cir-jump mean-reversion rate (1/time)");
    app->add_option("--alpha", params["alpha"], "cir-jump long-run level (state units)");
  }

  std::map<std::string, double> overrides() const {
    std::map<std::string, double> out;
    for (const auto& [k, v] : params)
      if (v) out[k] = *v;
    return out;
  }

  sojd::Preset preset() const { return sojd::make_preset(name, overrides()); }

  json to_json(const sojd::Preset& p) const {
    json j;
    j["model"] = p.name;
    for (const auto& [k, v] : p.params) j["params"][k] = v;
    return j;
  }
};

// Collects what a run read and wrote, then writes one manifest per output.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> argv)
      : subcommand_(std::move(subcommand)), argv_(std::move(argv)), started_(now_iso()) {}

  json& params() { return params_; }
  void seed(std::uint64_t s) { seed_ = s; }
  void input(const fs::path& p) { inputs_.push_back(p); }

  void output(const fs::path& p, const std::string& content) {
    sojd::io::write_atomic(p, content);
    outputs_.push_back({p, sojd::io::digest(content)});
  }

  void write(const fs::path& manifest_path) const {
    json j;
    j["tool"] = "sojd";
    j["version"] = sojd::io::kVersion;
    j["subcommand"] = subcommand_;
    j["argv"] = argv_;
    j["cwd"] = fs::current_path().string();
    j["params"] = params_;
    if (seed_) j["seed"] = *seed_;
    j["threads"] = sojd::resolve_threads(threads);
    j["simd"] = std::string(sojd::simd::name(sojd::simd::active()));
    j["inputs"] = json::array();
    for (const auto& p : inputs_) {
      json in;
      in["path"] = p.string();
      std::error_code ec;
      if (fs::exists(p, ec)) in["digest"] = sojd::io::digest(sojd::io::read_file(p));
      j["inputs"].push_back(in);
    }
    j["outputs"] = json::array();
    for (const auto& [p, d] : outputs_) j["outputs"].push_back({{"path", p.string()}, {"digest", d}});
    j["started"] = started_;
    j["finished"] = now_iso();
    sojd::io::write_atomic(manifest_path, j.dump(2) + "\n");
  }

  void write_beside_outputs() const {
    for (const auto& [p, d] : outputs_) {
      fs::path m = p;
      m += ".manifest.json";
      write(m);
    }
  }

  unsigned threads = 0;

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::string started_;
  json params_ = json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<fs::path> inputs_;
  std::vector<std::pair<fs::path, std::string>> outputs_;
};

std::vector<double> parse_grid(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw sojd::ArgumentError("--grid must be lo:hi:count, got '" + spec + "'");
  }
  const double lo = sojd::io::parse_double(spec.substr(0, a));
  const double hi = sojd::io::parse_double(spec.substr(a + 1, b - a - 1));
  const double cnt = sojd::io::parse_double(spec.substr(b + 1));
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(cnt >= 1) || cnt != std::floor(cnt) || (cnt > 1 && !(hi > lo))) {
    throw sojd::ArgumentError("--grid must be lo:hi:count with lo < hi and count >= 1, got '" + spec + "'");
  }
  const auto n = static_cast<std::size_t>(cnt);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

json relation_json(const sojd::RelationReport& r, std::uint64_t seed, const std::string& model) {
  return {{"relation", r.relation}, {"model", model},     {"x", r.x},           {"delta", r.delta},
          {"lhs_mc", r.lhs_mc},     {"rhs", r.rhs},       {"gap", r.gap},       {"se", r.se},
          {"pass", r.pass},         {"lhs_cv", r.lhs_cv}, {"gap_cv", r.gap_cv}, {"se_cv", r.se_cv},
          {"reps", r.reps},         {"substeps", r.substeps}, {"slack", r.slack}, {"seed", seed}};
}

json appendix_json(const sojd::AppendixReport& r, std::uint64_t seed, const std::string& model, double slack) {
  const auto& sum = r.terms.back();
  json j = {{"relation", "appendix"}, {"model", model},   {"x", r.x},         {"delta", r.delta},
            {"lhs_mc", sum.mc},       {"rhs", sum.closed_form}, {"gap", sum.gap}, {"se", sum.se},
            {"pass", r.pass},         {"reps", r.reps},   {"substeps", r.substeps}, {"slack", slack},
            {"seed", seed}};
  j["terms"] = json::array();
  for (const auto& t : r.terms) {
    j["terms"].push_back(
        {{"term", t.term}, {"mc", t.mc}, {"closed_form", t.closed_form}, {"gap", t.gap}, {"se", t.se}, {"pass", t.pass}});
  }
  return j;
}

std::string dump_json(const json& j) {
  // 17 significant digits for floats.
  return j.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
}

int run(const std::vector<std::string>& args);

int replay(const fs::path& manifest_path, std::optional<unsigned> threads, bool check) {
  const json m = json::parse(sojd::io::read_file(manifest_path));
  std::vector<std::string> argv;
  const auto recorded = m.at("argv").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    if (recorded[i] == "--threads") {
      ++i;
      continue;
    }
    if (recorded[i].rfind("--threads=", 0) == 0) continue;
    argv.push_back(recorded[i]);
  }
  if (threads) {
    argv.push_back("--threads");
    argv.push_back(std::to_string(*threads));
  }
  const fs::path old_cwd = fs::current_path();
  if (m.contains("cwd")) fs::current_path(m.at("cwd").get<std::string>());
  if (m.contains("inputs")) {
    for (const auto& in : m.at("inputs")) {
      if (!in.contains("digest")) continue;
      const std::string path = in.at("path");
      std::error_code ec;
      if (!fs::exists(path, ec) || sojd::io::digest(sojd::io::read_file(path)) != in.at("digest")) {
        std::cerr << "warning: input " << path << " differs from the manifest\n";
      }
    }
  }
  int code = kOk;
  try {
    code = run(argv);
  } catch (...) {
    fs::current_path(old_cwd);
    throw;
  }
  int result = code;
  if (check && code == kOk) {
    for (const auto& out : m.at("outputs")) {
      const std::string path = out.at("path");
      const std::string want = out.at("digest");
      const std::string got = sojd::io::digest(sojd::io::read_file(path));
      if (got != want) {
        std::cerr << "replay mismatch: " << path << " digest " << got << ", manifest has " << want << "\n";
        result = kCheckFailed;
      } else {
        std::cout << "replay identical: " << path << "\n";
      }
    }
  }
  fs::current_path(old_cwd);
  return result;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Simulation and kernel estimation for second-order jump-diffusions"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: SOJD_THREADS or all cores); results do not depend on it");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a fine path and optional integrated observations");
  ModelArgs sim_model;
  sim_model.add(sim);
  double T = 0, dt = 0, y0 = 0;
  std::optional<double> x0, sim_delta;
  std::uint64_t sim_seed = 0;
  std::string sim_out, obs_out;
  sim->add_option("--T", T, "Horizon (time units)")->required();
  sim->add_option("--dt", dt, "Fine Euler step (time units)")->required();
  sim->add_option("--x0", x0, "Initial X (state units; default: preset value)");
  sim->add_option("--y0", y0, "Initial Y (state x time units)")->capture_default_str();
  sim->add_option("--seed", sim_seed, "RNG seed (unsigned 64-bit)")->capture_default_str();
  sim->add_option("--out", sim_out, "Fine path CSV (t,x,y)");
  sim->add_option("--delta", sim_delta, "Sampling step for observations (time units, multiple of --dt)");
  sim->add_option("--obs-out", obs_out, "Observation CSV (i,t,y_obs,x_tilde,x_true); needs --delta");

  // estimate
  auto* est = app.add_subcommand("estimate", "Kernel estimates of density, drift and second moment on a grid");
  ModelArgs est_model;
  est_model.add(est);
  std::string input, grid = "-1:1:21", kernel = "gaussian", bandwidth = "auto", output;
  std::optional<double> est_delta;
  est->add_option("--input", input, "Observation CSV with a y_obs column")->required();
  est->add_option("--delta", est_delta, "Sampling step (time units; default: from the t column)");
  est->add_option("--grid", grid, "Evaluation grid lo:hi:count (state units)")->capture_default_str();
  est->add_option("--kernel", kernel, "Kernel: gaussian | quartic")->capture_default_str();
  est->add_option("--bandwidth", bandwidth, "Bandwidth h (state units) or 'auto' for h = delta^(2/11)")
      ->capture_default_str();
  est->add_option("--output", output, "Estimate CSV (x,p_hat,a_hat,b_hat,se_a,se_b,n_eff)")->required();
  bool use_model_se = false;
  est->add_flag("--model-se", use_model_se,
                "Fill se_b from the model's integral of c^4 f (otherwise se_b is nan)");

  // verify
  auto* ver = app.add_subcommand("verify", "Monte Carlo check of a conditional-moment relation");
  ModelArgs ver_model;
  ver_model.add(ver);
  std::string relation;
  double vx = 0.0, vdelta = 0.01;
  sojd::McOptions mc;
  std::optional<std::size_t> substeps;
  std::string ver_out;
  bool ver_check = false;
  ver->add_option("--relation", relation, "33 (drift), 34 (second moment) or appendix")
      ->required()
      ->check(CLI::IsMember({"33", "34", "appendix"}));
  ver->add_option("--x", vx, "Conditioning state (state units)")->capture_default_str();
  ver->add_option("--delta", vdelta, "Sampling step (time units)")->capture_default_str();
  ver->add_option("--reps", mc.reps, "Monte Carlo replicates")->capture_default_str();
  ver->add_option("--seed", mc.seed, "RNG seed (unsigned 64-bit)")->capture_default_str();
  ver->add_option("--substeps", substeps, "Fine Euler steps per sampling step (default 100; appendix 1000)");
  ver->add_option("--slack", mc.slack, "Additive tolerance of the pass rule")->capture_default_str();
  ver->add_option("--out", ver_out, "Also write the JSON report here");
  ver->add_flag("--check", ver_check, "Exit 3 when the report does not pass");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Replicated consistency / normality experiment");
  std::string cfg_path, exp_out;
  bool exp_check = false;
  exp->add_option("--config", cfg_path, "Flat key = value config file")->required();
  exp->add_option("--out", exp_out, "Output directory")->required();
  exp->add_flag("--check", exp_check, "Exit 3 when a configured check fails");

  // summarize
  auto* sum = app.add_subcommand("summarize", "Merge experiment reports and evaluate checks");
  std::vector<std::string> reports;
  std::string sum_out, sum_checks;
  double bias_tol = 0.15;
  bool sum_check = false;
  sum->add_option("reports", reports, "report.csv files or experiment directories")->required();
  sum->add_option("--out", sum_out, "Merged report CSV");
  sum->add_option("--checks", sum_checks, "Comma-separated checks: consistency,normality,equal_rate,baseline");
  sum->add_option("--bias-tol", bias_tol, "Relative bias tolerance for consistency")->capture_default_str();
  sum->add_flag("--check", sum_check, "Exit 3 when a check fails");

  // replay
  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string manifest_path;
  std::optional<unsigned> rep_threads;
  bool rep_check = false;
  rep->add_option("manifest", manifest_path, "Manifest JSON")->required();
  rep->add_option("--with-threads", rep_threads, "Worker threads for the re-run");
  rep->add_flag("--check", rep_check, "Compare output digests with the manifest; exit 3 on mismatch");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << " (see --help)\n";
    return kValidation;
  }

  Manifest manifest(app.get_subcommands().front()->get_name(), args);
  manifest.threads = threads;
  const unsigned workers = sojd::resolve_threads(threads);

  if (*sim) {
    if (sim_out.empty() && obs_out.empty()) throw sojd::ArgumentError("simulate needs --out and/or --obs-out");
    if (!obs_out.empty() && !sim_delta) throw sojd::ArgumentError("--obs-out needs --delta");
    const sojd::Preset p = sim_model.preset();
    const sojd::SimConfig cfg(dt, T, x0.value_or(p.x0), y0, sim_seed);
    manifest.params() = sim_model.to_json(p);
    manifest.params()["T"] = cfg.horizon();
    manifest.params()["dt"] = dt;
    manifest.params()["x0"] = cfg.x0();
    manifest.params()["y0"] = y0;
    if (sim_delta) manifest.params()["delta"] = *sim_delta;
    manifest.seed(sim_seed);
    const sojd::FinePath path = sojd::simulate_path(p.model, cfg);
    if (!sim_out.empty()) manifest.output(sim_out, sojd::io::path_csv(path));
    if (!obs_out.empty()) manifest.output(obs_out, sojd::io::observations_csv(sojd::observe(path, *sim_delta)));
    manifest.write_beside_outputs();
    std::cerr << "simulated " << path.x.size() << " points, " << path.jump_count << " jumps\n";
    return kOk;
  }

  if (*est) {
    const sojd::ObservationSet obs = sojd::io::read_observations(input, est_delta);
    manifest.input(input);
    const sojd::Kernel k = sojd::Kernel::by_name(kernel);
    double h = 0.0;
    if (bandwidth == "auto") {
      h = sojd::default_bandwidth(obs.delta);
    } else {
      try {
        h = sojd::io::parse_double(bandwidth);
      } catch (const sojd::ConfigError&) {
        throw sojd::ArgumentError("--bandwidth must be a positive number or 'auto' (h = delta^(2/11)), got '" +
                                  bandwidth + "'");
      }
    }
    const std::vector<double> g = parse_grid(grid);
    std::function<double(double)> c4;
    json params = json::object();
    if (use_model_se) {
      const sojd::Preset p = est_model.preset();
      params = est_model.to_json(p);
      c4 = [model = p.model](double x) { return sojd::jump_moment(model, 4, x); };
    }
    const sojd::EstimateResult r = sojd::estimate_on_grid(obs, k, h, g, c4, workers);
    params["kernel"] = k.name();
    params["h"] = h;
    params["delta"] = obs.delta;
    params["grid"] = grid;
    params["n"] = r.n;
    manifest.params() = params;
    manifest.output(output, sojd::io::estimates_csv(r));
    manifest.write_beside_outputs();
    std::size_t missing = 0;
    for (bool m : r.missing) missing += m;
    if (missing) std::cerr << missing << " grid points had no data nearby (written as nan)\n";
    return kOk;
  }

  if (*ver) {
    const sojd::Preset p = ver_model.preset();
    mc.threads = workers;
    mc.substeps = substeps.value_or(relation == "appendix" ? 1000 : 100);
    json report;
    bool pass = false;
    if (relation == "appendix") {
      const auto r = sojd::verify_appendix_terms(p.model, vx, vdelta, mc);
      report = appendix_json(r, mc.seed, p.name, mc.slack);
      pass = r.pass;
    } else {
      const auto r = relation == "33" ? sojd::verify_drift_relation(p.model, vx, vdelta, mc)
                                      : sojd::verify_second_moment_relation(p.model, vx, vdelta, mc);
      report = relation_json(r, mc.seed, p.name);
      pass = r.pass;
    }
    report["params"] = p.params;
    const std::string text = dump_json(report);
    std::cout << text;
    if (!ver_out.empty()) {
      manifest.params() = ver_model.to_json(p);
      manifest.params()["relation"] = relation;
      manifest.params()["x"] = vx;
      manifest.params()["delta"] = vdelta;
      manifest.params()["reps"] = mc.reps;
      manifest.params()["substeps"] = mc.substeps;
      manifest.params()["slack"] = mc.slack;
      manifest.seed(mc.seed);
      manifest.output(ver_out, text);
      manifest.write_beside_outputs();
    }
    return ver_check && !pass ? kCheckFailed : kOk;
  }

  if (*exp) {
    sojd::harness::ExperimentConfig cfg = sojd::harness::ExperimentConfig::load(cfg_path);
    cfg.threads = workers;
    manifest.input(cfg_path);
    for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
    const auto report = sojd::harness::run_consistency(cfg);
    const auto checks = sojd::harness::evaluate_checks(report.rows, cfg.checks, cfg.bias_tol);
    const fs::path dir(exp_out);
    fs::create_directories(dir);
    manifest.params()["config"] = cfg.to_text();
    manifest.seed(cfg.seed);
    manifest.output(dir / "report.csv", sojd::harness::report_csv(report.rows));
    manifest.output(dir / "zscores.csv", sojd::harness::zscores_csv(report.z_drift));
    manifest.output(dir / "zscores_second.csv", sojd::harness::zscores_csv(report.z_second));
    std::string summary = sojd::harness::summary_text(report.rows, checks);
    for (const auto& n : report.notes) summary += "note: " + n + "\n";
    char wall[64];
    std::snprintf(wall, sizeof wall, "wall time: %.2f s (%u threads)\n", report.wall_seconds, workers);
    // summary.txt carries the wall time and is therefore not digest-checked on replay.
    sojd::io::write_atomic(dir / "summary.txt", summary + wall);
    manifest.params()["wall_seconds"] = report.wall_seconds;
    manifest.write(dir / "manifest.json");
    std::cout << summary << wall;
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.pass;
    return exp_check && !ok ? kCheckFailed : kOk;
  }

  if (*sum) {
    std::vector<std::vector<sojd::harness::ReportRow>> all;
    for (const std::string& r : reports) {
      fs::path p(r);
      if (fs::is_directory(p)) p /= "report.csv";
      manifest.input(p);
      all.push_back(sojd::harness::parse_report_csv(sojd::io::read_file(p)));
    }
    const auto merged = sojd::harness::summarize(all);
    std::vector<std::string> names;
    std::string item;
    for (char c : sum_checks + ",") {
      if (c == ',') {
        if (!item.empty()) names.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
    const auto checks = sojd::harness::evaluate_checks(merged, names, bias_tol);
    std::cout << sojd::harness::summary_text(merged, checks);
    if (!sum_out.empty()) {
      manifest.params()["checks"] = sum_checks;
      manifest.params()["bias_tol"] = bias_tol;
      manifest.output(sum_out, sojd::harness::report_csv(merged));
      manifest.write_beside_outputs();
    }
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.pass;
    return sum_check && !ok ? kCheckFailed : kOk;
  }

  if (*rep) return replay(manifest_path, rep_threads, rep_check);
  return kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const sojd::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const sojd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  }
}
