#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pdflow/errors.hpp"
#include "pdflow/runner.hpp"
#include "pdflow/svg_chart.hpp"

namespace fs = std::filesystem;
using namespace pdflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitFailed = 3;

struct Options {
  std::string spec_file;
  std::string preset_name;
  std::optional<double> r;
  std::string eps;
  std::string params;
  std::string out;
  bool charts = false;
  std::string grid;
};

void add_common(CLI::App* cmd, Options& o, bool with_grid) {
  cmd->add_option("--spec", o.spec_file, "run spec JSON file");
  cmd->add_option("--preset", o.preset_name, "built-in experiment preset");
  cmd->add_option("--r", o.r, "exponent override for presets");
  cmd->add_option("--eps", o.eps, "Tikhonov term on|off (example1-strong)");
  cmd->add_option("--params", o.params, "m,n,e,d for example1 presets");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--charts", o.charts, "emit SVG charts");
  if (with_grid) cmd->add_option("--grid", o.grid, "path=v1,v2,...");
}

Job load_job(const Options& o) {
  if (o.spec_file.empty() == o.preset_name.empty()) {
    fail(ErrorKind::Input, "give exactly one of --spec or --preset");
  }
  if (!o.spec_file.empty()) {
    if (o.r || !o.eps.empty() || !o.params.empty()) {
      fail(ErrorKind::Input, "--r, --eps and --params apply to presets only");
    }
    std::ifstream in(o.spec_file);
    if (!in) fail(ErrorKind::Input, "cannot read " + o.spec_file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Input, std::string("malformed JSON: ") + e.what());
    }
    return job_from_json(j);
  }
  PresetOptions po;
  po.r = o.r;
  if (!o.eps.empty()) {
    if (o.eps != "on" && o.eps != "off") {
      fail(ErrorKind::Input, "--eps expects on or off");
    }
    po.eps_on = o.eps == "on";
  }
  if (!o.params.empty()) {
    std::vector<double> v;
    std::stringstream ss(o.params);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        fail(ErrorKind::Input, "--params expects numbers");
      }
    }
    po.params = v;
  }
  return preset(o.preset_name, po);
}

fs::path out_dir_for(const Options& o, const RunSpec& spec) {
  if (!o.out.empty()) return o.out;
  if (!spec.out_dir.empty()) return spec.out_dir;
  return fs::path("pdflow_out") / spec.name;
}

void print_summary(const RunResult& r, const fs::path& dir) {
  const MetricSeries& m = r.metrics;
  std::printf("%s: T=%g phi_err=%.3e feas=%.3e lag_gap=%.3e minnorm_dist=%.3e"
              " (%lld steps) -> %s\n",
              r.spec.name.c_str(), m.times.back(), m.phi_error.back(),
              m.feasibility.back(), m.lagrangian_gap.back(),
              m.minnorm_dist.back(), r.trajectory.stats.accepted,
              dir.string().c_str());
  for (const std::string& w : r.warnings) {
    std::fprintf(stderr, "warning [%s]: %s\n", r.spec.name.c_str(), w.c_str());
  }
}

int cmd_run(const Options& o) {
  const Job job = load_job(o);
  if (job.runs.size() != 1) {
    fail(ErrorKind::Input, "'run' takes a single run; use 'compare' for jobs");
  }
  const RunSpec& spec = job.runs.front();
  const fs::path dir = out_dir_for(o, spec);
  const RunResult r = execute(spec);
  write_artifacts(r, dir, o.charts || spec.charts);
  print_summary(r, dir);
  return kExitOk;
}

void print_verdict(const char* name, const HypothesisVerdict& v) {
  if (!v.applicable) {
    std::printf("  %s: not applicable\n", name);
    return;
  }
  std::printf("  %s: %s\n", name, v.ok ? "hypotheses hold" : "hypotheses FAIL");
  for (const Condition& c : v.conditions) {
    std::printf("    [%s] %s  %s\n", c.holds ? "ok" : "no", c.name.c_str(),
                c.detail.c_str());
  }
}

int cmd_validate(const Options& o) {
  const Job job = load_job(o);
  for (const RunSpec& spec : job.runs) {
    std::printf("%s (%s)\n", spec.name.c_str(),
                to_string(kind_of(spec.system)));
    const auto* p = std::get_if<TikhonovParams>(&spec.system);
    if (!p) {
      std::printf("  regime validation covers tikhonov_pd only\n");
      continue;
    }
    const RegimeReport rep = validate_regimes(p->beta, p->eps, p->gamma, p->delta);
    print_verdict("rates (O(1/beta))", rep.rate_bounds);
    print_verdict("minimal properties", rep.minimal_properties);
    print_verdict("strong convergence", rep.strong_convergence);
    std::printf("  earliest_valid_t = %g (t0 = %g)\n", rep.earliest_valid_t,
                rep.t0);
    if (rep.earliest_valid_t > rep.t0) {
      std::fprintf(stderr,
                   "warning [%s]: beta' <= beta/delta fails on [%g, %g)\n",
                   spec.name.c_str(), rep.t0, rep.earliest_valid_t);
    }
    if (!rep.damping_ok) {
      std::fprintf(stderr, "warning [%s]: 1/delta >= gamma\n", spec.name.c_str());
    }
    if (rep.power_rate && rep.power_rate->which != PowerRateClass::Case::NotApplicable) {
      std::printf("  power pair r1=%g r2=%g: %s, predicted gap order %s\n",
                  rep.power_rate->r1, rep.power_rate->r2, to_string(rep.power_rate->which),
                  rep.power_rate->predicted_order.c_str());
    }
    if (rep.horizon_limited) {
      std::printf("  (numerical checks on [t0, %g]; advisory only)\n",
                  rep.horizon);
    }
  }
  return kExitOk;
}

int cmd_compare(const Options& o) {
  const Job job = load_job(o);
  const fs::path root = o.out.empty() ? fs::path("pdflow_out") / job.name
                                      : fs::path(o.out);
  std::vector<RunResult> results;
  for (const RunSpec& spec : job.runs) {
    results.push_back(execute(spec));
    const fs::path dir = root / spec.name;
    write_artifacts(results.back(), dir, o.charts || spec.charts);
    print_summary(results.back(), dir);
  }
  write_comparison_csv(root / "comparison.csv", results);
  if (o.charts) {
    for (const char* col : {"phi_err", "feas"}) {
      std::vector<ChartSeries> series;
      for (const RunResult& r : results) {
        const CsvTable t = read_csv(root / r.spec.name / "metrics.csv");
        series.push_back({r.spec.name, t.column("t"), t.column(col)});
      }
      write_line_chart(root / (std::string("compare_") + col + ".svg"), series,
                       {job.name + ": " + col, "t", col});
    }
  }
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const Job job = load_job(o);
  if (job.runs.size() != 1) {
    fail(ErrorKind::Input, "'sweep' takes a single base run");
  }
  const RunSpec& base = job.runs.front();
  std::string grid_text = o.grid;
  if (grid_text.empty() && !o.preset_name.empty()) {
    grid_text = preset_default_grid(o.preset_name).value_or("");
  }
  if (grid_text.empty()) fail(ErrorKind::Input, "sweep needs --grid");
  const SweepGrid grid = parse_grid(grid_text);
  std::vector<RunSpec> cells;
  for (double v : grid.values) cells.push_back(apply_grid_value(base, grid, v));

  const fs::path root = o.out.empty() ? fs::path("pdflow_out") / (base.name + "-sweep")
                                      : fs::path(o.out);
  struct Cell {
    bool ok = false;
    std::string error;
    std::optional<RunResult> result;
  };
  std::vector<Cell> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      char sub[32];
      std::snprintf(sub, sizeof sub, "cell_%03zu", i);
      try {
        RunResult r = execute(cells[i]);
        write_artifacts(r, root / sub, o.charts);
        out[i].ok = true;
        out[i].result = std::move(r);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const unsigned n = sweep_threads(cells.size());
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream csv(root / "sweep.csv", std::ios::binary);
  csv << "cell,value,name,status,lag_gap,phi_err,feas,minnorm_dist,"
         "slope_lag_gap,slope_phi_err,slope_feas,slope_minnorm_dist,error\n";
  bool any_ok = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    csv << i << ',' << format_double(grid.values[i]) << ',' << cells[i].name
        << ',';
    if (!out[i].ok) {
      std::string err = out[i].error;
      for (char& c : err) {
        if (c == ',' || c == '\n') c = ' ';
      }
      csv << "failed,nan,nan,nan,nan,nan,nan,nan,nan," << err << '\n';
      std::fprintf(stderr, "cell %zu failed: %s\n", i, out[i].error.c_str());
      continue;
    }
    any_ok = true;
    const RunResult& r = *out[i].result;
    const MetricSeries& m = r.metrics;
    csv << "ok," << format_double(m.lagrangian_gap.back()) << ','
        << format_double(m.phi_error.back()) << ','
        << format_double(m.feasibility.back()) << ','
        << format_double(m.minnorm_dist.back());
    for (const NamedFit& f : r.fits) {
      csv << ',' << format_double(f.fit ? f.fit->slope : std::nan(""));
    }
    csv << ",\n";
    std::printf("cell %zu %s=%g: minnorm_dist(T)=%.6e phi_err(T)=%.6e\n", i,
                grid.path.back().c_str(), grid.values[i], m.minnorm_dist.back(),
                m.phi_error.back());
  }
  if (o.charts && any_ok) {
    std::vector<ChartSeries> series;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!out[i].ok) continue;
      const RunResult& r = *out[i].result;
      series.push_back({cells[i].name, r.metrics.times, r.metrics.minnorm_dist});
    }
    write_line_chart(root / "sweep_minnorm_dist.svg", series,
                     {base.name + " sweep", "t", "minnorm_dist"});
  }
  return any_ok ? kExitOk : kExitFailed;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Input:
    case ErrorKind::Unsupported:
      return kExitInvalid;
    default:
      return kExitFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual flow simulator"};
  app.require_subcommand(1);
  Options o;
  auto* run = app.add_subcommand("run", "simulate one run");
  auto* validate = app.add_subcommand("validate", "check schedule hypotheses");
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  auto* compare = app.add_subcommand("compare", "run several systems");
  add_common(run, o, false);
  add_common(validate, o, false);
  add_common(sweep, o, true);
  add_common(compare, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (validate->parsed()) return cmd_validate(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (compare->parsed()) return cmd_compare(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailed;
  }
  return kExitInvalid;
}
