#include "pdflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "pdflow/errors.hpp"
#include "pdflow/svg_chart.hpp"

namespace pdflow {

namespace fs = std::filesystem;

namespace {

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Window last_decade(double t0, double T) {
  return {std::max(t0, T / 10.0), T};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Input, "cannot write " + path.string());
  out << text;
}

std::optional<Curve> sqrt_curve(const Curve& c) {
  if (c.family() != Curve::Family::Power) return std::nullopt;
  return Curve::power(std::sqrt(c.coefficient()), c.exponent() / 2.0, c.t0());
}

double fraction_after(const std::vector<double>& t,
                      const std::vector<double>& cum, double from) {
  const double total = cum.back();
  if (!(total > 0.0)) return 0.0;
  // Linear interpolation of the running integral at `from`.
  const auto it = std::lower_bound(t.begin(), t.end(), from);
  double at = cum.front();
  if (it == t.end()) {
    at = cum.back();
  } else if (it != t.begin()) {
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (from - t[i - 1]) / (t[i] - t[i - 1]);
    at = cum[i - 1] + w * (cum[i] - cum[i - 1]);
  }
  return (total - at) / total;
}

}  // namespace

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return columns[i];
  }
  fail(ErrorKind::Input, "CSV has no column '" + name + "'");
}

namespace {

// Non-numeric cells (names, status text) read as NaN.
double parse_cell(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  return end != cell.c_str() && *end == '\0' ? v : std::nan("");
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, "cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Input, "empty CSV " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  table.columns.resize(table.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',') && k < table.columns.size()) {
      table.columns[k++].push_back(parse_cell(cell));
    }
    // getline drops a trailing empty field.
    if (k + 1 == table.columns.size() && line.back() == ',') {
      table.columns[k++].push_back(std::nan(""));
    }
    if (k != table.columns.size()) {
      fail(ErrorKind::Input, "ragged CSV row in " + path.string());
    }
  }
  return table;
}

SaturationReport last_decade_fraction(const IntegralEstimates& est) {
  const double t0 = est.times.front(), T = est.times.back();
  const double from = T / 10.0 >= t0 ? T / 10.0 : std::max(t0, T - 10.0);
  return {fraction_after(est.times, est.velocity, from),
          fraction_after(est.times, est.scaled_gap, from),
          fraction_after(est.times, est.tikhonov, from),
          fraction_after(est.times, est.feasibility, from)};
}

RunResult execute(const RunSpec& spec) {
  SeparableProblem prob = spec.problem.build();
  ReferenceSolution refs = solve_saddle_point(prob);
  const SystemKind kind = kind_of(spec.system);
  const StateLayout layout = layout_for(prob, kind);
  const SystemState init =
      spec.initial.value_or(default_initial_state(prob, kind));

  const SystemSpec& sys = spec.system;
  const OdeRhs rhs = [&sys, &prob](double t, const Vec& y, Vec& out) {
    vector_field(sys, prob, t, y, out);
  };
  Trajectory traj = integrate(rhs, spec.t0, spec.T, pack(init),
                              spec.integrator,
                              SampleGrid::log_spaced(spec.samples));

  RunResult res{spec, std::move(prob), std::move(refs), layout,
                std::move(traj), {}, {}, {}, {}, {}, {}, {}};
  res.metrics = metrics(res.trajectory, layout, res.problem, res.refs);

  if (const auto* p = std::get_if<TikhonovParams>(&spec.system)) {
    res.energy = energies(res.trajectory, layout, res.problem, res.refs, *p);
    if (res.trajectory.times.size() >= kMinIntegralSamples) {
      res.integrals =
          integral_estimates(res.trajectory, layout, res.problem, res.refs, *p);
    }
    res.regime = validate_regimes(p->beta, p->eps, p->gamma, p->delta);
    if (p->eps.family() != Curve::Family::Zero) {
      res.path = tikhonov_path(res.trajectory, layout, res.problem, res.refs,
                               p->eps);
    }
    if (damping_warning(*p)) {
      res.warnings.push_back("1/delta >= gamma: energy sign not guaranteed");
    }
    if (res.regime->earliest_valid_t > spec.t0) {
      std::ostringstream os;
      os << "beta' <= beta/delta only holds from t = "
         << res.regime->earliest_valid_t;
      res.warnings.push_back(os.str());
    }
  }
  if (!res.refs.unique) {
    res.warnings.push_back("saddle set is not a singleton; metrics use the "
                           "least-norm KKT solution");
  }

  const Window w = last_decade(spec.t0, spec.T);
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"lag_gap", &res.metrics.lagrangian_gap},
      {"phi_err", &res.metrics.phi_error},
      {"feas", &res.metrics.feasibility},
      {"minnorm_dist", &res.metrics.minnorm_dist}};
  for (const auto& [name, values] : series) {
    NamedFit nf{name, std::nullopt, ""};
    try {
      nf.fit = fit_rate(res.metrics.times, *values, w);
    } catch (const Error& e) {
      nf.error = e.what();
    }
    res.fits.push_back(std::move(nf));
  }
  return res;
}

Json report_json(const RunResult& r) {
  Json j;
  j["name"] = r.spec.name;
  j["system"] = system_to_json(r.spec.system);
  j["horizon"] = {r.spec.t0, r.spec.T};

  Json ref;
  ref["x_star"] = vec_json(r.refs.x_star);
  ref["y_star"] = vec_json(r.refs.y_star);
  ref["lambda_star"] = vec_json(r.refs.lambda_star);
  ref["phi_star"] = r.refs.phi_star;
  ref["x_bar"] = vec_json(r.refs.x_bar);
  ref["y_bar"] = vec_json(r.refs.y_bar);
  ref["kkt_residual"] = r.refs.kkt_residual;
  ref["unique"] = r.refs.unique;
  j["reference"] = std::move(ref);

  const StepStats& st = r.trajectory.stats;
  j["integrator"] = {{"accepted", st.accepted},
                     {"rejected", st.rejected},
                     {"rhs_evals", st.rhs_evals},
                     {"final_step", st.final_step}};

  const MetricSeries& m = r.metrics;
  j["final"] = {{"t", m.times.back()},
                {"lag_gap", m.lagrangian_gap.back()},
                {"phi_err", m.phi_error.back()},
                {"feas", m.feasibility.back()},
                {"gradf_gap", m.grad_f_gap.back()},
                {"gradg_gap", m.grad_g_gap.back()},
                {"minnorm_dist", m.minnorm_dist.back()}};

  Json fits = Json::object();
  for (const NamedFit& nf : r.fits) {
    fits[nf.series] = nf.fit ? rate_fit_to_json(*nf.fit) : Json{{"error", nf.error}};
  }
  j["rate_fits"] = std::move(fits);

  if (const auto* p = std::get_if<TikhonovParams>(&r.spec.system)) {
    if (r.energy) {
      const EnergyReport& e = *r.energy;
      j["energy"] = {
          {"monotonicity_violation", e.monotonicity_violation},
          {"relative_monotonicity_violation", e.relative_monotonicity_violation},
          {"Etilde_initial", e.Etilde.front()},
          {"Etilde_final", e.Etilde.back()},
          {"sign_indefinite", e.sign_indefinite},
          {"ehat_available", e.ehat_available}};
    }
    if (r.integrals) {
      const IntegralEstimates& est = *r.integrals;
      const SaturationReport sat = last_decade_fraction(est);
      j["integral_estimates"] = {
          {"velocity", {{"total", est.velocity.back()}, {"last_decade_fraction", sat.velocity}}},
          {"scaled_gap", {{"total", est.scaled_gap.back()}, {"last_decade_fraction", sat.scaled_gap}}},
          {"tikhonov", {{"total", est.tikhonov.back()}, {"last_decade_fraction", sat.tikhonov}}},
          {"feasibility", {{"total", est.feasibility.back()}, {"last_decade_fraction", sat.feasibility}}}};
    }
    if (r.regime) j["regime"] = regime_to_json(*r.regime);
    if (r.path) {
      j["tikhonov_path"] = {{"min_residual", r.path->min_residual},
                            {"final_path_gap", r.path->path_gap.back()}};
    }
    Json ratios = Json::object();
    const Window early{r.spec.t0, 10.0 * r.spec.t0};
    const Window late{r.spec.T / 2.0, r.spec.T};
    if (late.lo > early.hi) {
      try {
        ratios["lag_gap_weight_beta"] =
            bounded_ratio(m.times, m.lagrangian_gap, p->beta, early, late);
        if (auto sb = sqrt_curve(p->beta)) {
          ratios["feas_weight_sqrt_beta"] =
              bounded_ratio(m.times, m.feasibility, *sb, early, late);
        }
      } catch (const Error& e) {
        ratios["error"] = e.what();
      }
    }
    j["bounded_ratios"] = std::move(ratios);
    const ExistenceConstants c0 = existence_constants(r.problem, *p, r.spec.t0);
    const ExistenceConstants c1 = existence_constants(r.problem, *p, r.spec.T);
    j["existence_constants"] = {{"C1", c0.C1}, {"C2", c0.C2}, {"C3", c0.C3},
                                {"K_t0", c0.K}, {"S_t0", c0.S},
                                {"K_T", c1.K}, {"S_T", c1.S}};
  }
  j["warnings"] = r.warnings;
  return j;
}

void write_artifacts(const RunResult& r, const fs::path& dir, bool charts) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Input, "cannot create " + dir.string());
  {
    std::ofstream out(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(out, r.trajectory, r.layout);
  }
  {
    std::ofstream out(dir / "metrics.csv", std::ios::binary);
    write_metrics_csv(out, r.metrics, r.energy ? &*r.energy : nullptr);
  }
  write_text(dir / "report.json", dump_json(report_json(r)));
  RunSpec resolved = r.spec;
  resolved.out_dir = dir.string();
  resolved.charts = charts;
  write_text(dir / "resolved_spec.json", dump_json(resolved_json(resolved)));

  if (!charts) return;
  const CsvTable t = read_csv(dir / "metrics.csv");
  const auto& time = t.column("t");
  std::vector<ChartSeries> rates;
  for (const char* name : {"lag_gap", "phi_err", "feas", "minnorm_dist"}) {
    rates.push_back({name, time, t.column(name)});
  }
  write_line_chart(dir / "rates.svg", rates,
                   {r.spec.name + ": convergence measures", "t", "value"});
  if (r.energy) {
    write_line_chart(dir / "energy.svg",
                     {{"Etilde", time, t.column("Etilde")},
                      {"E", time, t.column("E")}},
                     {r.spec.name + ": energies", "t", "energy"});
    ChartOptions lin{r.spec.name + ": corrected energy", "t", "value"};
    lin.log_x = false;
    lin.log_y = false;
    write_line_chart(dir / "corrected.svg",
                     {{"corrected", time, t.column("corrected")}}, lin);
  }
}

void write_comparison_csv(const fs::path& path,
                          const std::vector<RunResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Input, "cannot write " + path.string());
  out << "name,system,t,lag_gap,phi_err,feas,minnorm_dist\n";
  for (const RunResult& r : results) {
    const MetricSeries& m = r.metrics;
    out << r.spec.name << ',' << to_string(kind_of(r.spec.system)) << ','
        << format_double(m.times.back()) << ','
        << format_double(m.lagrangian_gap.back()) << ','
        << format_double(m.phi_error.back()) << ','
        << format_double(m.feasibility.back()) << ','
        << format_double(m.minnorm_dist.back()) << '\n';
  }
}

unsigned sweep_threads(std::size_t cells) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PDFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(
      std::max<std::size_t>(1, std::min<std::size_t>(n, cells)));
}

}  // namespace pdflow
