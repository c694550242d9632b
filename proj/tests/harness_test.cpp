#include <gtest/gtest.h>

#include <fstream>

#include "mks/experiment.hpp"
#include "mks/verify.hpp"

using namespace mks;
namespace fs = std::filesystem;

namespace {
const char* kMinimal = R"(
[grid]
points = 8
length = 6.283185307179586

[scheme]
dt = 0.125
T = 0.5

[monte_carlo]
paths = 3
seed = 11
)";

const char* kDriven = R"(
[grid]
points = 8
length = 6.283185307179586

[model]
q = 2
mode = strong

[noise]
count = 1
B1 = plane-wave k=1,0,0 amp=0.3 form=sin
b1 = plane-wave k=0,1,0 dir=0,0,1,0,0,0 amp=0.2 form=cos
J = plane-wave k=1,1,0 dir=0,0,1,0,0,0 form=cos
J.time = sine amp=1 omega=2
u0 = plane-wave k=0,0,1 dir=1,0,0,0,1,0 form=cos

[scheme]
type = lie
dt = 0.0625
T = 0.5
cutoff = 2

[monte_carlo]
paths = 8
seed = 3
)";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mks_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST(Config, MinimalDefaults) {
  const ExperimentConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.points, 8);
  EXPECT_EQ(c.cutoff, 2);  // Nyquist level of an 8-point 2pi grid
  EXPECT_EQ(c.noise_count, 0);
  EXPECT_EQ(c.scheme.steps(), 4);
  EXPECT_EQ(c.equation, Equation::TSEE);
  EXPECT_FALSE(c.strong);
  EXPECT_EQ(c.kernel.form, KernelSpec::Form::zero);
  bool m1_skipped = false;
  for (const auto& a : c.assumptions)
    if (a.tag == "[M1]") m1_skipped = a.status == "not required (weak mode)";
  EXPECT_TRUE(m1_skipped);
}

TEST(Config, EchoListsAssumptions) {
  const std::string echo = echo_config(parse_config(kDriven));
  for (const char* tag : {"[W1]", "[W5]", "[M1]", "[M5]", "[M6]"}) EXPECT_NE(echo.find(tag), std::string::npos) << tag;
}

TEST(Config, StrongModeRejectsLargeExponent) {
  std::string t = kDriven;
  t.replace(t.find("q = 2"), 5, "q = 3");
  EXPECT_NE(config_error(t).find("[M1]"), std::string::npos);
}

TEST(Config, StrongModeRejectsBroadbandNoise) {
  std::string t = kDriven;
  const auto at = t.find("b1 = ");
  t.replace(at, t.find('\n', at) - at, "b1 = gaussian-bump width=0.3");
  EXPECT_NE(config_error(t).find("[M5]"), std::string::npos);
}

TEST(Config, RejectsNonBandLimitedGauge) {
  std::string t = kDriven;
  t.replace(t.find("k=1,0,0 amp=0.3"), 7, "k=3,0,0");
  EXPECT_NE(config_error(t).find("[M6]"), std::string::npos);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  const std::string e = config_error("[grid]\npoints = 8\nthis line is junk\n");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
}

TEST(Config, UnknownKeysAndProfilesAreErrors) {
  EXPECT_NE(config_error(std::string(kMinimal) + "\n[scheme2]\nx = 1\n"), "");
  EXPECT_NE(config_error("[grid]\npoints = 8\nsize = 3\n").find("size"), std::string::npos);
  EXPECT_NE(config_error("[noise]\nu0 = ripple\n").find("ripple"), std::string::npos);
  EXPECT_NE(config_error("[noise]\nu0 = constant ampl=2\n").find("ampl"), std::string::npos);
}

TEST(Config, DtMustDivideHorizon) {
  std::string t = kMinimal;
  t.replace(t.find("dt = 0.125"), 10, "dt = 0.3");
  EXPECT_NE(config_error(t), "");
}

TEST(Experiment, ZeroInputGivesZeroSeries) {
  const fs::path dir = scratch("zero");
  const auto out = run_experiment(parse_config(kMinimal), {1, dir.string(), true});
  EXPECT_EQ(out.status, 0);
  for (const auto& p : out.report.paths)
    for (double v : p.series.norm2) EXPECT_EQ(v, 0.0);
  for (const char* f : {"paths.csv", "summary.csv", "series.csv", "events.csv", "config_echo.ini"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Experiment, SummaryIndependentOfWorkers) {
  const ExperimentConfig c = parse_config(kDriven);
  const fs::path a = scratch("w1"), b = scratch("w8");
  run_experiment(c, {1, a.string(), true});
  run_experiment(c, {8, b.string(), true});
  for (const char* f : {"paths.csv", "summary.csv", "series.csv", "events.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Experiment, ReportReproducesSummary) {
  const fs::path dir = scratch("report");
  run_experiment(parse_config(kDriven), {1, dir.string(), true});
  const std::string before = slurp(dir / "summary.csv");
  fs::remove(dir / "summary.csv");
  reaggregate(dir);
  EXPECT_EQ(slurp(dir / "summary.csv"), before);
  EXPECT_THROW(reaggregate(scratch("missing")), UsageError);
}

TEST(Experiment, PathsCsvRoundTrip) {
  const auto out = run_experiment(parse_config(kDriven), {1, "", false});
  const auto recs = path_records(out.report.paths);
  std::stringstream ss;
  write_paths_csv(ss, recs);
  const auto back = read_paths_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].seed, recs[i].seed);
    EXPECT_EQ(back[i].agg.sup_norm_sq, recs[i].agg.sup_norm_sq);
    EXPECT_EQ(back[i].agg.final_residual, recs[i].agg.final_residual);
  }
  std::stringstream bad("path,seed\n");
  EXPECT_THROW(read_paths_csv(bad), UsageError);
}

TEST(Experiment, BlowUpIsReported) {
  const char* text = R"(
[grid]
points = 8
length = 6.283185307179586
[model]
q = 3
[noise]
J = constant amp=1e6
u0 = constant amp=10
[scheme]
dt = 0.25
T = 1
[monte_carlo]
paths = 2
)";
  const auto out = run_experiment(parse_config(text), {1, "", false});
  EXPECT_EQ(out.status, 2);
  EXPECT_EQ(out.report.blow_ups, 2);
  ASSERT_FALSE(out.report.paths[0].events.empty());
  EXPECT_EQ(out.report.paths[0].events.back().kind, PathEvent::Kind::blow_up);
}

TEST(Experiment, CheckpointsAreWritten) {
  std::string t = kDriven;
  t += "\n[outputs]\ncheckpoints = on\nstride = 4\n";
  const fs::path dir = scratch("ckpt");
  run_experiment(parse_config(t), {1, dir.string(), true});
  const std::string index = slurp(dir / "checkpoints" / "index.csv");
  EXPECT_EQ(index.rfind("step,time,file\n", 0), 0u);
  const Field6 y = load_checkpoint(dir / "checkpoints" / "y_8.mks");
  EXPECT_EQ(y.grid().points(), 8);
}

TEST(Workers, EnvironmentDefault) {
  ::setenv("MKS_WORKERS", "3", 1);
  EXPECT_EQ(config_detail::resolve_workers(0), 3);
  EXPECT_EQ(config_detail::resolve_workers(2), 2);
  ::unsetenv("MKS_WORKERS");
  EXPECT_EQ(config_detail::resolve_workers(0), 1);
}

TEST(Verify, FastSuitePasses) {
  for (const auto& e : verify_suite(VerifyLevel::fast)) EXPECT_TRUE(e.pass) << e.name << " " << e.measured;
}

TEST(Verify, BrokenCurlIsCaught) {
  bool skew_failed = false;
  for (const auto& e : verify_suite(VerifyLevel::fast, {true}))
    if (e.name.find("maxwell_skew_adjoint") != std::string::npos && !e.pass) skew_failed = true;
  EXPECT_TRUE(skew_failed);
}
