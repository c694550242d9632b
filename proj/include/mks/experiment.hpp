#pragma once

// Experiment orchestration: Monte-Carlo run, CSV/checkpoint persistence,
// summary re-aggregation and convergence sweeps driven by a config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mks/config.hpp"
#include "mks/diagnostics.hpp"

namespace mks {

inline std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// One row of paths.csv.
struct PathRecord {
  int path = 0;
  std::uint64_t seed = 0;
  bool blew_up = false;
  int tau_exits = 0;
  PathAggregates agg;
};

inline std::vector<PathRecord> path_records(const std::vector<PathResult>& paths) {
  std::vector<PathRecord> r;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    PathRecord p;
    p.path = static_cast<int>(i);
    p.seed = paths[i].seed;
    p.blew_up = paths[i].blew_up;
    for (const auto& e : paths[i].events) p.tau_exits += e.kind == PathEvent::Kind::tau_exit;
    p.agg = paths[i].agg;
    r.push_back(p);
  }
  return r;
}

inline const char* kPathsHeader =
    "path,seed,blew_up,tau_exits,sup_norm_sq,lq_integral,sup_lambda_sq,lambda0,forcing_sq,"
    "noise_sq,u0_sq,final_norm,final_residual";

inline void write_paths_csv(std::ostream& os, const std::vector<PathRecord>& recs) {
  os << kPathsHeader << "\n";
  for (const auto& r : recs) {
    const auto& a = r.agg;
    os << r.path << ',' << r.seed << ',' << (r.blew_up ? 1 : 0) << ',' << r.tau_exits;
    for (double v : {a.sup_norm_sq, a.lq_integral, a.sup_lambda_sq, a.lambda0, a.forcing_sq,
                     a.noise_sq, a.u0_sq, a.final_norm, a.final_residual})
      os << ',' << csv_number(v);
    os << "\n";
  }
}

inline std::vector<PathRecord> read_paths_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || config_detail::trim(line) != kPathsHeader)
    throw UsageError("paths.csv: unexpected header");
  std::vector<PathRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (config_detail::trim(line).empty()) continue;
    const auto f = config_detail::split(line, ',');
    if (f.size() != 13) throw UsageError("paths.csv line " + std::to_string(lineno) + ": expected 13 fields");
    PathRecord r;
    const std::string at = "paths.csv line " + std::to_string(lineno);
    r.path = static_cast<int>(config_detail::to_int(at, f[0]));
    r.seed = static_cast<std::uint64_t>(config_detail::to_int(at, f[1]));
    r.blew_up = config_detail::to_int(at, f[2]) != 0;
    r.tau_exits = static_cast<int>(config_detail::to_int(at, f[3]));
    double* dst[] = {&r.agg.sup_norm_sq, &r.agg.lq_integral, &r.agg.sup_lambda_sq, &r.agg.lambda0,
                     &r.agg.forcing_sq,  &r.agg.noise_sq,    &r.agg.u0_sq,         &r.agg.final_norm,
                     &r.agg.final_residual};
    for (std::size_t i = 0; i < 9; ++i) {
      const std::string& s = f[4 + i];
      *dst[i] = (s == "nan" || s == "-nan") ? std::numeric_limits<double>::quiet_NaN()
                                            : config_detail::to_double(at, s);
    }
    out.push_back(r);
  }
  return out;
}

// Fold over path records in file (seed) order.
inline void write_summary_csv(std::ostream& os, const std::vector<PathRecord>& recs) {
  os << "quantity,samples,mean,variance,ci_half\n";
  auto row = [&](const char* name, auto get) {
    std::vector<double> v;
    for (const auto& r : recs)
      if (!r.blew_up) v.push_back(get(r.agg));
    const McSummary s = mc_summary(v);
    os << name << ',' << s.samples << ',' << csv_number(s.mean) << ',' << csv_number(s.variance)
       << ',' << csv_number(s.ci_half) << "\n";
  };
  row("sup_norm_sq", [](const PathAggregates& a) { return a.sup_norm_sq; });
  row("lq_integral", [](const PathAggregates& a) { return a.lq_integral; });
  row("apriori_lhs", [](const PathAggregates& a) { return a.sup_norm_sq + a.lq_integral; });
  row("apriori_rhs", [](const PathAggregates& a) { return a.forcing_sq + a.noise_sq + a.u0_sq; });
  row("sup_lambda_sq", [](const PathAggregates& a) { return a.sup_lambda_sq; });
  row("lambda0", [](const PathAggregates& a) { return a.lambda0; });
  row("final_norm", [](const PathAggregates& a) { return a.final_norm; });
  row("final_residual", [](const PathAggregates& a) { return a.final_residual; });
  int blow = 0, tau = 0;
  for (const auto& r : recs) {
    blow += r.blew_up;
    tau += r.tau_exits;
  }
  os << "paths," << recs.size() << ",,,\n";
  os << "blow_ups," << blow << ",,,\n";
  os << "tau_exits," << tau << ",,,\n";
}

inline void write_series_csv(std::ostream& os, const std::vector<PathResult>& paths) {
  os << "path,seed,step,time,norm2,lq_pow,lambda_norm,energy_residual\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const PathSeries& s = paths[i].series;
    for (std::size_t k = 0; k < s.step.size(); ++k)
      os << i << ',' << paths[i].seed << ',' << s.step[k] << ',' << csv_number(s.time[k]) << ','
         << csv_number(s.norm2[k]) << ',' << csv_number(s.lq_pow[k]) << ','
         << csv_number(s.lambda_norm[k]) << ',' << csv_number(s.energy_residual[k]) << "\n";
  }
}

inline void write_events_csv(std::ostream& os, const std::vector<PathResult>& paths) {
  os << "path,seed,kind,time,value,detail\n";
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& e : paths[i].events) {
      std::string d = e.detail;
      for (auto& ch : d)
        if (ch == ',' || ch == '\n') ch = ';';
      os << i << ',' << paths[i].seed << ',' << to_string(e.kind) << ',' << csv_number(e.time)
         << ',' << csv_number(e.value) << ',' << d << "\n";
    }
}

inline void write_text_atomic(const std::filesystem::path& p, const std::string& text) {
  detail::atomic_write(p, [&](std::ostream& os) { os << text; });
}

template <typename Writer>
void write_csv_atomic(const std::filesystem::path& p, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_text_atomic(p, os.str());
}

struct ExperimentOutcome {
  RunReport report;
  int status = 0;  // 0 ok, 2 blow-up, 3 invariant failure
  std::vector<std::string> failures;
  std::filesystem::path out_dir;
};

struct RunOptions {
  int workers = 0;         // 0: config / MKS_WORKERS / 1
  std::string out_dir;     // empty: config
  bool write_outputs = true;
};

inline ExperimentOutcome run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
  ExperimentOutcome out;
  const int workers = opt.workers > 0 ? opt.workers : effective_workers(c);
  const TruncatedModel model(c.spec, c.scheme, c.kernel);
  const auto seeds = seed_range(c.seed, c.paths);
  std::vector<PathResult> paths = run_paths(model, seeds, workers);

  for (std::size_t i = 0; i < paths.size(); ++i) {
    const PathResult& p = paths[i];
    if (p.blew_up) {
      out.status = std::max(out.status, 2);
      out.failures.push_back("path " + std::to_string(i) + ": " + p.events.back().detail);
      continue;
    }
    const Field6 proj = model.projector().apply(p.final_state);
    if (l2_norm(proj - p.final_state) != 0.0) {
      out.status = 3;
      out.failures.push_back("path " + std::to_string(i) + ": state left the Galerkin range");
    }
  }

  if (opt.write_outputs) {
    namespace fs = std::filesystem;
    out.out_dir = opt.out_dir.empty() ? fs::path(c.out_dir) : fs::path(opt.out_dir);
    fs::create_directories(out.out_dir);
    const auto recs = path_records(paths);
    write_text_atomic(out.out_dir / "config_echo.ini", echo_config(c));
    write_csv_atomic(out.out_dir / "paths.csv", [&](std::ostream& os) { write_paths_csv(os, recs); });
    write_csv_atomic(out.out_dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, recs); });
    write_csv_atomic(out.out_dir / "series.csv", [&](std::ostream& os) { write_series_csv(os, paths); });
    write_csv_atomic(out.out_dir / "events.csv", [&](std::ostream& os) { write_events_csv(os, paths); });
    if (c.checkpoints && !seeds.empty()) {
      SchemeConfig sc = c.scheme;
      sc.store_trajectory = true;
      sc.diagnostics = false;
      const TruncatedModel cm(c.spec, sc, c.kernel);
      const PathResult p = run_path(cm, default_bundles(cm)(seeds.front()));
      const fs::path dir = out.out_dir / "checkpoints";
      fs::create_directories(dir);
      std::ostringstream index;
      index << "step,time,file\n";
      for (std::size_t k = 0; k < p.states.size(); ++k) {
        const int stepno = p.series.step[k];
        const std::string name = "y_" + std::to_string(stepno) + ".mks";
        save_checkpoint(dir / name, p.states[k]);
        index << stepno << ',' << csv_number(p.times[k]) << ',' << name << "\n";
      }
      write_text_atomic(dir / "index.csv", index.str());
    }
  }
  out.report = summarize(std::move(paths));
  return out;
}

// Re-aggregates summary.csv from paths.csv in `dir`.
inline void reaggregate(const std::filesystem::path& dir) {
  std::ifstream f(dir / "paths.csv");
  if (!f) throw UsageError("report: cannot read " + (dir / "paths.csv").string());
  const auto recs = read_paths_csv(f);
  write_csv_atomic(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, recs); });
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& t, const char* xname) {
  os << xname << ",samples,mean_error,ci_half\n";
  for (const auto& r : t.rows)
    os << csv_number(r.x) << ',' << r.error.samples << ',' << csv_number(r.error.mean) << ','
       << csv_number(r.error.ci_half) << "\n";
}

}  // namespace mks
