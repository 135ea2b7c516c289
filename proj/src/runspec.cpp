#include "pdflow/runspec.hpp"

#include <cmath>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                    const std::string& ctx) {
  if (!j.is_object()) fail(ErrorKind::Input, ctx + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::Input, ctx + ": unknown key \"" + it.key() + "\"");
  }
}

double num(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorKind::Input, what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ErrorKind::Input, what + " must be finite");
  return v;
}

ProblemRef problem_from(const Json& j) {
  reject_unknown(j, {"builtin", "params", "seed", "dims", "inline"}, "problem");
  ProblemRef p;
  if (j.contains("inline")) {
    if (j.contains("builtin")) {
      fail(ErrorKind::Input, "problem: give either builtin or inline");
    }
    p.source = "inline";
    p.inline_problem = j.at("inline");
    return p;
  }
  if (!j.contains("builtin") || !j.at("builtin").is_string()) {
    fail(ErrorKind::Input, "problem: missing builtin name or inline document");
  }
  p.source = j.at("builtin").get<std::string>();
  if (p.source == "example1") {
    p.params = {5.0, 1.0, 1.0, 5.0};
    if (j.contains("params")) {
      const Json& a = j.at("params");
      if (!a.is_array() || a.size() != 4) {
        fail(ErrorKind::Input, "example1 params must be [m, n, e, d]");
      }
      for (std::size_t i = 0; i < 4; ++i) p.params[i] = num(a[i], "params");
    }
  } else if (p.source == "random_qp") {
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) {
        fail(ErrorKind::Input, "seed must be a nonnegative integer");
      }
      p.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("dims")) {
      const Json& d = j.at("dims");
      if (!d.is_array() || d.size() != 3) {
        fail(ErrorKind::Input, "dims must be [n1, n2, m]");
      }
      for (const auto& v : d) {
        if (!v.is_number_integer() || v.get<int>() <= 0) {
          fail(ErrorKind::Input, "dims must be positive integers");
        }
      }
      p.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
    }
  } else if (p.source != "example2") {
    fail(ErrorKind::Input, "unknown builtin problem '" + p.source + "'");
  }
  if (p.source != "example1" && j.contains("params")) {
    fail(ErrorKind::Input, "params apply to example1 only");
  }
  return p;
}

Json problem_json(const ProblemRef& p) {
  Json j;
  if (p.source == "inline") {
    j["inline"] = p.inline_problem;
    return j;
  }
  j["builtin"] = p.source;
  if (p.source == "example1") j["params"] = p.params;
  if (p.source == "random_qp") {
    j["seed"] = p.seed;
    j["dims"] = {p.dims.n1, p.dims.n2, p.dims.m};
  }
  return j;
}

IntegratorConfig integrator_from(const Json& j) {
  reject_unknown(j, {"rtol", "atol", "h_init", "h_max", "max_steps", "safety"},
                 "integrator");
  IntegratorConfig c;
  if (j.contains("rtol")) c.rtol = num(j.at("rtol"), "rtol");
  if (j.contains("atol")) c.atol = num(j.at("atol"), "atol");
  if (j.contains("h_init")) c.h_init = num(j.at("h_init"), "h_init");
  if (j.contains("h_max")) c.h_max = num(j.at("h_max"), "h_max");
  if (j.contains("max_steps")) {
    if (!j.at("max_steps").is_number_integer()) {
      fail(ErrorKind::Input, "max_steps must be an integer");
    }
    c.max_steps = j.at("max_steps").get<long long>();
  }
  if (j.contains("safety")) c.safety = num(j.at("safety"), "safety");
  if (!(c.rtol > 0.0) || !(c.atol > 0.0) || !(c.h_init > 0.0) ||
      c.max_steps <= 0 || !(c.safety > 0.0 && c.safety < 1.0) ||
      (c.h_max && !(*c.h_max >= c.h_init))) {
    fail(ErrorKind::Input, "invalid integrator configuration");
  }
  return c;
}

void check_initial(const SystemState& s, const SeparableProblem& prob,
                   SystemKind kind) {
  const bool dims_ok = s.x.size() == prob.n1() && s.vx.size() == prob.n1() &&
                       s.y.size() == prob.n2() && s.vy.size() == prob.n2() &&
                       s.lam.size() == prob.m();
  if (!dims_ok) fail(ErrorKind::Input, "initial state dimensions mismatch");
  if (has_dual_velocity(kind) != s.vlam.has_value()) {
    fail(ErrorKind::Input, has_dual_velocity(kind)
                               ? "initial state needs vlam for this system"
                               : "initial vlam given for a first-order dual");
  }
  if (s.vlam && s.vlam->size() != prob.m()) {
    fail(ErrorKind::Input, "initial vlam dimension mismatch");
  }
  if (!pack(s).allFinite()) {
    fail(ErrorKind::Input, "initial state must be finite");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

RunSpec make_run(std::string name, ProblemRef problem, SystemSpec system,
                 double T) {
  RunSpec r;
  r.name = std::move(name);
  r.problem = std::move(problem);
  r.system = std::move(system);
  r.t0 = 1.0;
  r.T = T;
  return r;
}

ProblemRef example1_ref(const PresetOptions& o) {
  ProblemRef p;
  p.source = "example1";
  p.params = o.params.value_or(std::vector<double>{5.0, 1.0, 1.0, 5.0});
  if (p.params.size() != 4) {
    fail(ErrorKind::Input, "--params expects m,n,e,d");
  }
  return p;
}

ProblemRef example2_ref() {
  ProblemRef p;
  p.source = "example2";
  return p;
}

std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

TikhonovParams tikhonov(double gamma, double delta, Curve beta, Curve eps) {
  TikhonovParams p;
  p.gamma = gamma;
  p.delta = delta;
  p.beta = std::move(beta);
  p.eps = std::move(eps);
  return p;
}

}  // namespace

SeparableProblem ProblemRef::build() const {
  if (source == "example1") {
    if (params.size() != 4) fail(ErrorKind::Input, "example1 needs 4 params");
    return builtin::example1(params[0], params[1], params[2], params[3]);
  }
  if (source == "example2") return builtin::example2();
  if (source == "random_qp") return builtin::random_qp(seed, dims);
  if (source == "inline") return problem_from_json(inline_problem);
  fail(ErrorKind::Input, "unknown problem source '" + source + "'");
}

SystemState default_initial_state(const SeparableProblem& prob,
                                  SystemKind kind) {
  SystemState s;
  s.x = Vec::Ones(prob.n1());
  s.y = Vec::Ones(prob.n2());
  s.lam = Vec::Ones(prob.m());
  s.vx = Vec::Ones(prob.n1());
  s.vy = Vec::Ones(prob.n2());
  if (has_dual_velocity(kind)) s.vlam = Vec::Ones(prob.m());
  return s;
}

RunSpec run_from_json(const Json& j) {
  reject_unknown(j,
                 {"name", "problem", "system", "horizon", "initial",
                  "integrator", "samples", "outputs"},
                 "run spec");
  RunSpec r;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) fail(ErrorKind::Input, "name must be text");
    r.name = j.at("name").get<std::string>();
  }
  if (j.contains("horizon")) {
    const Json& h = j.at("horizon");
    if (!h.is_array() || h.size() != 2) {
      fail(ErrorKind::Input, "horizon must be [t0, T]");
    }
    r.t0 = num(h[0], "t0");
    r.T = num(h[1], "T");
  }
  if (!(r.t0 > 0.0) || !(r.T > r.t0)) {
    fail(ErrorKind::Input, "horizon needs 0 < t0 < T");
  }
  if (j.contains("problem")) r.problem = problem_from(j.at("problem"));
  if (!j.contains("system")) fail(ErrorKind::Input, "run spec: missing system");
  r.system = system_from_json(j.at("system"), r.t0);
  if (j.contains("integrator")) r.integrator = integrator_from(j.at("integrator"));
  if (j.contains("samples")) {
    if (!j.at("samples").is_number_integer() || j.at("samples").get<int>() < 2) {
      fail(ErrorKind::Input, "samples must be an integer ≥ 2");
    }
    r.samples = j.at("samples").get<int>();
  }
  if (j.contains("outputs")) {
    const Json& o = j.at("outputs");
    reject_unknown(o, {"dir", "charts"}, "outputs");
    if (o.contains("dir")) r.out_dir = o.at("dir").get<std::string>();
    if (o.contains("charts")) r.charts = o.at("charts").get<bool>();
  }

  const SeparableProblem prob = r.problem.build();
  const SystemKind kind = kind_of(r.system);
  if (j.contains("initial")) {
    const Json& init = j.at("initial");
    if (init.is_string() && init.get<std::string>() == "ones") {
      r.initial = default_initial_state(prob, kind);
    } else {
      reject_unknown(init, {"x", "y", "lam", "vx", "vy", "vlam"}, "initial");
      r.initial = state_from_json(init);
    }
  } else {
    r.initial = default_initial_state(prob, kind);
  }
  check_initial(*r.initial, prob, kind);
  if (!r.integrator.h_max) r.integrator.h_max = (r.T - r.t0) / 10.0;
  if (r.integrator.h_init > *r.integrator.h_max) {
    fail(ErrorKind::Input, "h_init exceeds h_max");
  }
  return r;
}

Job job_from_json(const Json& j) {
  Job job;
  if (j.is_object() && j.contains("runs")) {
    reject_unknown(j, {"name", "runs"}, "job");
    job.name = j.value("name", std::string("job"));
    if (!j.at("runs").is_array() || j.at("runs").empty()) {
      fail(ErrorKind::Input, "runs must be a non-empty array");
    }
    for (const auto& r : j.at("runs")) job.runs.push_back(run_from_json(r));
  } else {
    job.runs.push_back(run_from_json(j));
    job.name = job.runs.front().name;
  }
  return job;
}

Json resolved_json(const RunSpec& spec) {
  Json j;
  j["name"] = spec.name;
  j["problem"] = problem_json(spec.problem);
  j["system"] = system_to_json(spec.system);
  j["horizon"] = {spec.t0, spec.T};
  if (spec.initial) {
    j["initial"] = state_to_json(*spec.initial);
  } else {
    j["initial"] = "ones";
  }
  Json integ;
  integ["rtol"] = spec.integrator.rtol;
  integ["atol"] = spec.integrator.atol;
  integ["h_init"] = spec.integrator.h_init;
  integ["h_max"] =
      spec.integrator.h_max.value_or((spec.T - spec.t0) / 10.0);
  integ["max_steps"] = spec.integrator.max_steps;
  integ["safety"] = spec.integrator.safety;
  j["integrator"] = std::move(integ);
  j["samples"] = spec.samples;
  j["outputs"] = {{"dir", spec.out_dir}, {"charts", spec.charts}};
  return j;
}

Json resolved_json(const Job& job) {
  if (job.runs.size() == 1) return resolved_json(job.runs.front());
  Json j;
  j["name"] = job.name;
  j["runs"] = Json::array();
  for (const RunSpec& r : job.runs) j["runs"].push_back(resolved_json(r));
  return j;
}

std::vector<std::string> preset_names() {
  return {"example1-fig1",         "example1-strong",
          "example2-tikhonov",     "example2-second-order-dual",
          "example2-rescaled-alm", "example2-compare",
          "power-rate"};
}

Job preset(const std::string& name, const PresetOptions& o) {
  auto finish = [](RunSpec r) {
    Json j = resolved_json(r);
    Job job;
    job.name = r.name;
    job.runs.push_back(run_from_json(j));
    return job;
  };
  auto no_eps_flag = [&] {
    if (o.eps_on) fail(ErrorKind::Input, "--eps applies to example1-strong only");
  };
  auto no_params_flag = [&] {
    if (o.params) fail(ErrorKind::Input, "--params applies to example1 presets only");
  };

  if (name == "example1-fig1") {
    no_eps_flag();
    const double r = o.r.value_or(1.6);
    return finish(make_run(
        "example1-fig1-r" + format_param(r), example1_ref(o),
        tikhonov(0.25, 9.0, Curve::power(1.0, 0.5), Curve::power(3.0, -r)),
        100.0));
  }
  if (name == "example1-strong") {
    if (o.r) fail(ErrorKind::Input, "--r does not apply to example1-strong");
    const bool on = o.eps_on.value_or(true);
    const ProblemRef p = example1_ref(o);
    std::string label = "example1-strong-";
    for (std::size_t i = 0; i < p.params.size(); ++i) {
      label += (i ? "_" : "") + format_param(p.params[i]);
    }
    label += on ? "-eps" : "-noeps";
    return finish(make_run(
        label, p,
        tikhonov(10.0, 0.5, Curve::power(1.0, 0.5),
                 on ? Curve::power(15.0, -1.6) : Curve::zero()),
        30.0));
  }
  no_params_flag();
  if (name == "example2-tikhonov") {
    no_eps_flag();
    const double r = o.r.value_or(0.4);
    return finish(make_run(
        "example2-tikhonov-r" + format_param(r), example2_ref(),
        tikhonov(10.0, 0.2, Curve::power(1.0, r), Curve::power(1.0, -2.0)),
        100.0));
  }
  if (name == "example2-second-order-dual") {
    no_eps_flag();
    if (o.r) fail(ErrorKind::Input, "--r does not apply to this preset");
    return finish(make_run("example2-second-order-dual", example2_ref(),
                           SecondOrderDualParams{}, 100.0));
  }
  if (name == "example2-rescaled-alm") {
    no_eps_flag();
    if (o.r) fail(ErrorKind::Input, "--r does not apply to this preset");
    return finish(make_run("example2-rescaled-alm", example2_ref(),
                           RescaledAlmParams{}, 100.0));
  }
  if (name == "example2-compare") {
    no_eps_flag();
    if (o.r) fail(ErrorKind::Input, "--r does not apply to example2-compare");
    Job job;
    job.name = "example2-compare";
    for (double r : {0.0, 0.1, 0.4}) {
      PresetOptions po;
      po.r = r;
      job.runs.push_back(preset("example2-tikhonov", po).runs.front());
    }
    job.runs.push_back(preset("example2-second-order-dual").runs.front());
    job.runs.push_back(preset("example2-rescaled-alm").runs.front());
    return job;
  }
  if (name == "power-rate") {
    no_eps_flag();
    const double r2 = o.r.value_or(2.5);
    RunSpec run = make_run(
        "power-rate-r2_" + format_param(r2), example2_ref(),
        tikhonov(10.0, 0.2, Curve::power(1.0, 2.0), Curve::power(3.0, -r2)),
        100.0);
    return finish(run);
  }
  fail(ErrorKind::Input, "unknown preset '" + name + "'");
}

std::optional<std::string> preset_default_grid(const std::string& name) {
  if (name == "example1-fig1") return "system.eps.r=1.2,1.4,1.6,1.8";
  return std::nullopt;
}

SweepGrid parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorKind::Input, "grid must look like path=v1,v2,...");
  }
  SweepGrid g;
  g.path = split(text.substr(0, eq), '.');
  for (const std::string& part : g.path) {
    if (part.empty()) fail(ErrorKind::Input, "grid path has an empty segment");
  }
  for (const std::string& v : split(text.substr(eq + 1), ',')) {
    if (v.empty()) continue;
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || !std::isfinite(d)) {
      fail(ErrorKind::Input, "grid value '" + v + "' is not a number");
    }
    g.values.push_back(d);
  }
  if (g.values.empty()) fail(ErrorKind::Input, "grid has no values");
  return g;
}

RunSpec apply_grid_value(const RunSpec& base, const SweepGrid& grid,
                         double value) {
  Json j = resolved_json(base);
  Json* node = &j;
  for (std::size_t i = 0; i + 1 < grid.path.size(); ++i) {
    const std::string& key = grid.path[i];
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        fail(ErrorKind::Input, "grid path index '" + key + "' is not a number");
      }
      if (idx >= node->size()) fail(ErrorKind::Input, "grid path out of range");
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      fail(ErrorKind::Input, "grid path segment '" + key + "' not found");
    }
  }
  const std::string& leaf = grid.path.back();
  if (node->is_array()) {
    const std::size_t idx = std::stoul(leaf);
    if (idx >= node->size()) fail(ErrorKind::Input, "grid path out of range");
    (*node)[idx] = value;
  } else if (node->is_object()) {
    (*node)[leaf] = value;
  } else {
    fail(ErrorKind::Input, "grid path does not name a field");
  }
  RunSpec out = run_from_json(j);
  std::ostringstream os;
  os << base.name << "-" << grid.path.back() << value;
  out.name = os.str();
  return out;
}

}  // namespace pdflow
