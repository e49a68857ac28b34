#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "sojd/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;  // stdout and stderr
};

// Runs the CLI inside `dir` with the given arguments.
CliRun cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd =
      "cd '" + dir.string() + "' && " + env + " '" + std::string(SOJD_CLI_PATH) + "' " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("sojd-cli-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

void write(const fs::path& p, const std::string& s) { sojd::io::write_atomic(p, s); }

}  // namespace

TEST(Cli, SimulateWritesOneRowPerFineStep) {
  const auto d = workdir("sim");
  const CliRun r = cli(d, "simulate --model ou-jump --T 10 --dt 1e-3 --seed 1 --out p.csv");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(sojd::io::read_file(d / "p.csv")), 10001u + 1u);  // rows + header
  const json m = json::parse(sojd::io::read_file(d / "p.csv.manifest.json"));
  EXPECT_EQ(m["subcommand"], "simulate");
  EXPECT_EQ(m["seed"], 1);
  EXPECT_EQ(m["outputs"][0]["digest"], sojd::io::digest(sojd::io::read_file(d / "p.csv")));
  EXPECT_TRUE(m.contains("started") && m.contains("finished") && m.contains("version"));
}

TEST(Cli, NegativeBandwidthNamesTheDefaultRule) {
  const auto d = workdir("bw");
  ASSERT_EQ(cli(d, "simulate --T 5 --dt 1e-3 --delta 0.01 --obs-out obs.csv").code, 0);
  const CliRun r = cli(d, "estimate --input obs.csv --output est.csv --bandwidth -1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("delta^(2/11)"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(d / "est.csv"));
}

TEST(Cli, EstimateWritesGrid) {
  const auto d = workdir("est");
  ASSERT_EQ(cli(d, "simulate --T 50 --dt 1e-3 --delta 0.01 --obs-out obs.csv").code, 0);
  const CliRun r = cli(d, "estimate --input obs.csv --grid -1:1:5 --kernel quartic --bandwidth auto --output est.csv --model-se");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto t = sojd::io::parse_csv(sojd::io::read_file(d / "est.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "p_hat", "a_hat", "b_hat", "se_a", "se_b", "n_eff"}));
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.rows[0][0], "-1");
  EXPECT_NE(t.rows[2][5], "nan");
  EXPECT_TRUE(fs::exists(d / "est.csv.manifest.json"));
}

TEST(Cli, VerifySecondMomentPassesOnDefaultPreset) {
  const auto d = workdir("verify");
  const CliRun r = cli(d, "verify --relation 34 --model ou-jump --x 0 --delta 0.01 --reps 100000 --seed 7");
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  for (const char* k : {"relation", "x", "delta", "lhs_mc", "rhs", "gap", "se", "pass"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["relation"], "34");
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_NEAR(j["rhs"].get<double>(), 2.0 / 3.0 * 0.34, 1e-15);
}

TEST(Cli, ValidationErrorsExitOne) {
  const auto d = workdir("validation");
  EXPECT_EQ(cli(d, "").code, 1);
  EXPECT_EQ(cli(d, "simulate --T 1 --dt 1e-3 --out p.csv --bogus").code, 1);
  EXPECT_EQ(cli(d, "estimate --input missing.csv --output e.csv").code, 1);
  EXPECT_EQ(cli(d, "simulate --model nope --T 1 --dt 1e-3 --out p.csv").code, 1);
  EXPECT_EQ(cli(d, "verify --relation 35").code, 1);
  write(d / "bad.cfg", "ladder = 100:0.01\n");
  const CliRun r = cli(d, "experiment --config bad.cfg --out o");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("bad.cfg"), std::string::npos);
  EXPECT_EQ(lines(r.out), 1u) << r.out;  // one actionable line
}

TEST(Cli, NumericFailureExitsTwo) {
  const auto d = workdir("numeric");
  const CliRun r = cli(d, "simulate --theta 1e6 --T 10 --dt 1e-3 --x0 1 --out p.csv");
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, HelpListsFlagsWithUnits) {
  const auto d = workdir("help");
  for (const char* sub : {"simulate", "estimate", "verify", "experiment", "summarize", "replay"}) {
    const CliRun r = cli(d, std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
  const std::string sim = cli(d, "simulate --help").out;
  for (const char* flag : {"--T", "--dt", "--x0", "--seed", "--out", "--delta", "--obs-out", "--lambda"})
    EXPECT_NE(sim.find(flag), std::string::npos) << flag;
  EXPECT_NE(sim.find("time units"), std::string::npos);
  EXPECT_NE(cli(d, "verify --help").out.find("state units"), std::string::npos);
}

TEST(Cli, ExperimentOutputsAndCheckExitCode) {
  const auto d = workdir("exp");
  write(d / "ok.cfg", "ladder = 300:0.02:auto;600:0.02:auto\nreps = 20\nburnin = 2\n");
  const CliRun r = cli(d, "experiment --config ok.cfg --out out");
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"report.csv", "zscores.csv", "zscores_second.csv", "summary.txt", "manifest.json"})
    EXPECT_TRUE(fs::exists(d / "out" / f)) << f;
  EXPECT_EQ(sojd::io::read_file(d / "out" / "zscores.csv").substr(0, 22), "rung,point,replicate,z");

  // A bias tolerance nobody can meet makes the consistency check fail.
  write(d / "strict.cfg",
        "ladder = 300:0.02:auto;600:0.02:auto\nreps = 20\nburnin = 2\nchecks = consistency\nbias_tol = 1e-12\n");
  EXPECT_EQ(cli(d, "experiment --config strict.cfg --out strict --check").code, 3);
  EXPECT_EQ(cli(d, "experiment --config strict.cfg --out strict").code, 0);

  const CliRun s = cli(d, "summarize out strict/report.csv --out merged.csv --checks consistency --bias-tol 1e-12 --check");
  EXPECT_EQ(s.code, 3) << s.out;
  EXPECT_TRUE(fs::exists(d / "merged.csv"));
  EXPECT_EQ(lines(sojd::io::read_file(d / "merged.csv")), 1u + 2u * lines(sojd::io::read_file(d / "out/report.csv")) - 2u);
}

TEST(Cli, ReplayReproducesOutputsWithOtherThreadCounts) {
  const auto d = workdir("replay");
  write(d / "e.cfg", "ladder = 300:0.02:auto;600:0.02:0.3\nreps = 16\nburnin = 2\npoints = 0,0.5\nbaseline = true\n");
  ASSERT_EQ(cli(d, "--threads 1 experiment --config e.cfg --out run").code, 0);
  ASSERT_EQ(cli(d, "simulate --T 20 --dt 1e-3 --delta 0.01 --obs-out obs.csv --seed 3").code, 0);
  ASSERT_EQ(cli(d, "--threads 1 estimate --input obs.csv --output est.csv").code, 0);
  ASSERT_EQ(cli(d, "--threads 1 verify --relation 33 --x 0.5 --reps 4000 --out v.json").code, 0);

  for (const char* m : {"run/manifest.json", "obs.csv.manifest.json", "est.csv.manifest.json", "v.json.manifest.json"}) {
    const CliRun r = cli(d, std::string("replay ") + m + " --with-threads 3 --check");
    EXPECT_EQ(r.code, 0) << m << "\n" << r.out;
    EXPECT_EQ(r.out.find("mismatch"), std::string::npos) << r.out;
  }
  const CliRun env = cli(d, "replay est.csv.manifest.json --check", "SOJD_THREADS=2");
  EXPECT_EQ(env.code, 0) << env.out;

  // A tampered manifest digest is reported.
  std::string text = sojd::io::read_file(d / "est.csv.manifest.json");
  json m = json::parse(text);
  m["outputs"][0]["digest"] = "0000000000000000";
  write(d / "tampered.json", m.dump());
  EXPECT_EQ(cli(d, "replay tampered.json --check").code, 3);
}
