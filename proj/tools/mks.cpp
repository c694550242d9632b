// mks: run, verify, convergence and report verbs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "mks/experiment.hpp"
#include "mks/verify.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<long long> seed;
  std::optional<int> paths;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool need_config) {
  auto* opt = app->add_option("--config", c.config, "experiment config file");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "base seed (overrides monte_carlo.seed)");
  app->add_option("--paths", c.paths, "number of paths (overrides monte_carlo.paths)")
      ->check(CLI::PositiveNumber);
  app->add_option("--workers", c.workers, "worker threads (default: config, MKS_WORKERS, 1)")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory (overrides outputs.directory)");
}

mks::ExperimentConfig load(const Common& c) {
  mks::ExperimentConfig cfg = mks::load_config(c.config);
  if (c.seed) {
    if (*c.seed < 0) throw mks::ConfigError("--seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(*c.seed);
  }
  if (c.paths) cfg.paths = *c.paths;
  if (c.workers > 0) cfg.workers = c.workers;
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

int cmd_run(const Common& c) {
  const mks::ExperimentConfig cfg = load(c);
  std::cout << mks::echo_config(cfg);
  const auto outcome = mks::run_experiment(cfg);
  const auto& r = outcome.report;
  std::cout << "paths " << r.paths.size() << ", blow-ups " << r.blow_ups << ", tau exits "
            << r.tau_exits << "\n";
  std::cout << "E sup|y|^2 = " << r.sup_norm_sq.mean << " +- " << r.sup_norm_sq.ci_half << "\n";
  std::cout << "E sup|Lambda|^2 = " << r.sup_lambda_sq.mean << " +- " << r.sup_lambda_sq.ci_half
            << "\n";
  for (const auto& f : outcome.failures) std::cerr << "FAIL " << f << "\n";
  std::cout << "outputs in " << outcome.out_dir.string() << "\n";
  return outcome.status;
}

int cmd_verify(const std::string& level, bool break_curl, const std::string& out) {
  const auto lv = level == "full" ? mks::VerifyLevel::full : mks::VerifyLevel::fast;
  const auto entries = mks::verify_suite(lv, {break_curl});
  std::ostringstream csv;
  csv << "check,measured,threshold,pass\n";
  bool all = true;
  for (const auto& e : entries) {
    std::cout << (e.pass ? "PASS " : "FAIL ") << e.name << " measured=" << e.measured
              << " threshold=" << e.threshold << "\n";
    csv << e.name << ',' << mks::csv_number(e.measured) << ',' << mks::csv_number(e.threshold)
        << ',' << (e.pass ? 1 : 0) << "\n";
    all = all && e.pass;
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    mks::write_text_atomic(std::filesystem::path(out) / "verify.csv", csv.str());
  }
  return all ? 0 : 1;
}

int cmd_convergence(const Common& c, const std::string& kind, std::vector<double> values) {
  const mks::ExperimentConfig cfg = load(c);
  const int workers = mks::effective_workers(cfg);
  const auto seeds = mks::seed_range(cfg.seed, cfg.paths);
  mks::ConvergenceTable t;
  const char* xname = "dt";
  if (kind == "dt") {
    if (values.empty()) values = {cfg.dt, cfg.dt / 2, cfg.dt / 4};
    t = mks::strong_convergence_order(cfg.spec, cfg.scheme, cfg.kernel, seeds, values, workers);
  } else {
    xname = "level";
    std::vector<int> levels;
    if (values.empty())
      for (int n = std::max(1, cfg.cutoff - 2); n <= cfg.cutoff; ++n) levels.push_back(n);
    for (double v : values) levels.push_back(static_cast<int>(v));
    t = mks::galerkin_convergence(cfg.spec, cfg.scheme, cfg.kernel, levels, seeds, workers);
  }
  std::ostringstream csv;
  mks::write_convergence_csv(csv, t, xname);
  std::cout << csv.str();
  if (kind == "dt") {
    if (t.fit.exact) std::cout << "errors identically zero: exact\n";
    else std::cout << "fitted slope " << t.fit.slope << "\n";
  }
  std::filesystem::create_directories(cfg.out_dir);
  mks::write_text_atomic(std::filesystem::path(cfg.out_dir) / ("convergence_" + kind + ".csv"),
                         csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-spectral stochastic Maxwell-Kerr simulator"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run a Monte-Carlo experiment");
  add_common(run, run_opts, true);

  std::string level = "fast", verify_out;
  bool break_curl = false;
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--out", verify_out, "directory for verify.csv");
  verify->add_flag("--break-curl", break_curl, "mutation fixture: flip one curl sign in M");

  Common conv_opts;
  std::string kind = "dt";
  std::vector<double> values;
  auto* conv = app.add_subcommand("convergence", "dt or cutoff-level sweep");
  add_common(conv, conv_opts, true);
  conv->add_option("--kind", kind, "dt or n")->check(CLI::IsMember({"dt", "n"}));
  conv->add_option("--values", values, "step sizes or cutoff levels")->delimiter(',');

  std::string report_dir;
  auto* report = app.add_subcommand("report", "re-aggregate summary.csv from paths.csv");
  report->add_option("--out", report_dir, "experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*verify) return cmd_verify(level, break_curl, verify_out);
    if (*conv) return cmd_convergence(conv_opts, kind, values);
    if (*report) {
      mks::reaggregate(report_dir);
      std::cout << "wrote " << (std::filesystem::path(report_dir) / "summary.csv").string() << "\n";
      return 0;
    }
  } catch (const mks::ConfigError& e) {
    std::cerr << "configuration error:\n" << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
