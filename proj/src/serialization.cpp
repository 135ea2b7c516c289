#include "pdflow/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorKind::Input, what + " must be a number");
  return j.get<double>();
}

Vec vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::Input, what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], what);
  return v;
}

Mat mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    fail(ErrorKind::Input, what + " must be a non-empty array of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      fail(ErrorKind::Input, what + " has ragged rows");
    }
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = number(j[i][k], what);
  }
  return m;
}

const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorKind::Input, ctx + ": missing \"" + key + "\"");
  }
  return j.at(key);
}

QuadraticForm quadratic_from_json(const Json& j, const std::string& ctx) {
  QuadraticForm qf;
  qf.P = mat_from_json(require(j, "P", ctx), ctx + ".P");
  qf.q = j.contains("q") ? vec_from_json(j.at("q"), ctx + ".q")
                         : Vec::Zero(qf.P.rows());
  qf.c = j.contains("c") ? number(j.at("c"), ctx + ".c") : 0.0;
  return qf;
}

Json quadratic_to_json(const QuadraticForm& qf) {
  Json j;
  j["P"] = mat_to_json(qf.P);
  j["q"] = vec_to_json(qf.q);
  j["c"] = qf.c;
  return j;
}

void dump_into(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += ": ";
        dump_into(out, it.value(), indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_primitive();
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump_into(out, j[i], indent, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_into(out, j[i], indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_into(out, j, indent, 0);
  out += "\n";
  return out;
}

Json problem_to_json(const SeparableProblem& prob) {
  if (!prob.is_quadratic()) {
    fail(ErrorKind::Unsupported, "only quadratic problems serialize to JSON");
  }
  Json j;
  j["f"] = quadratic_to_json(prob.f().quadratic_form());
  j["g"] = quadratic_to_json(prob.g().quadratic_form());
  j["A"] = mat_to_json(prob.A());
  j["B"] = mat_to_json(prob.B());
  j["b"] = vec_to_json(prob.b());
  return j;
}

SeparableProblem problem_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::Input, "problem must be an object");
  QuadraticForm f = quadratic_from_json(require(j, "f", "problem"), "f");
  QuadraticForm g = quadratic_from_json(require(j, "g", "problem"), "g");
  Mat A = mat_from_json(require(j, "A", "problem"), "A");
  Mat B = mat_from_json(require(j, "B", "problem"), "B");
  Vec b = vec_from_json(require(j, "b", "problem"), "b");
  return SeparableProblem::from_quadratics(std::move(f), std::move(g),
                                           std::move(A), std::move(B),
                                           std::move(b));
}

Json curve_to_json(const Curve& c, CurveRole role) {
  Json j;
  switch (c.family()) {
    case Curve::Family::Zero:
      j["family"] = "zero";
      return j;
    case Curve::Family::Power: {
      j["family"] = "power";
      j["c"] = c.coefficient();
      const double r = role == CurveRole::Decay ? -c.exponent() : c.exponent();
      j["r"] = r == 0.0 ? 0.0 : r;
      return j;
    }
    case Curve::Family::User:
      break;
  }
  fail(ErrorKind::Unsupported, "user curve '" + c.label() + "' has no JSON form");
}

Curve curve_from_json(const Json& j, CurveRole role, double t0) {
  if (j.is_number()) return Curve::constant(j.get<double>(), t0);
  const std::string family =
      require(j, "family", "curve").is_string()
          ? j.at("family").get<std::string>()
          : "";
  if (family == "zero") return Curve::zero(t0);
  if (family == "power" || family == "constant") {
    const double c = number(require(j, "c", "curve"), "curve.c");
    const double r = j.contains("r") ? number(j.at("r"), "curve.r") : 0.0;
    return Curve::power(c, role == CurveRole::Decay ? -r : r, t0);
  }
  fail(ErrorKind::Input, "unknown curve family '" + family + "'");
}

Json system_to_json(const SystemSpec& spec) {
  return std::visit(
      overloaded{
          [](const TikhonovParams& p) {
            Json j;
            j["kind"] = to_string(SystemKind::TikhonovPD);
            j["gamma"] = p.gamma;
            j["delta"] = p.delta;
            j["beta"] = curve_to_json(p.beta, CurveRole::Growth);
            j["eps"] = curve_to_json(p.eps, CurveRole::Decay);
            return j;
          },
          [](const SecondOrderDualParams& p) {
            Json j;
            j["kind"] = to_string(SystemKind::SecondOrderDual);
            j["gamma"] = curve_to_json(p.gamma, CurveRole::Growth);
            j["delta"] = curve_to_json(p.delta, CurveRole::Growth);
            return j;
          },
          [](const RescaledAlmParams& p) {
            Json j;
            j["kind"] = to_string(SystemKind::RescaledALM);
            j["gamma"] = curve_to_json(p.gamma, CurveRole::Growth);
            j["beta"] = curve_to_json(p.beta, CurveRole::Growth);
            j["a"] = curve_to_json(p.a, CurveRole::Growth);
            j["mu"] = p.mu;
            return j;
          }},
      spec);
}

SystemSpec system_from_json(const Json& j, double t0) {
  const Json& kind_j = require(j, "kind", "system");
  const std::string kind = kind_j.is_string() ? kind_j.get<std::string>() : "";
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = it.key() == "kind";
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) {
        fail(ErrorKind::Input,
             "system '" + kind + "' does not accept \"" + it.key() + "\"");
      }
    }
  };
  SystemSpec spec;
  if (kind == to_string(SystemKind::TikhonovPD)) {
    check_keys({"gamma", "delta", "beta", "eps"});
    TikhonovParams p;
    if (j.contains("gamma")) p.gamma = number(j.at("gamma"), "gamma");
    if (j.contains("delta")) p.delta = number(j.at("delta"), "delta");
    p.beta = j.contains("beta")
                 ? curve_from_json(j.at("beta"), CurveRole::Growth, t0)
                 : Curve::constant(1.0, t0);
    p.eps = j.contains("eps")
                ? curve_from_json(j.at("eps"), CurveRole::Decay, t0)
                : Curve::zero(t0);
    spec = p;
  } else if (kind == to_string(SystemKind::SecondOrderDual)) {
    check_keys({"gamma", "delta"});
    SecondOrderDualParams p;
    p.gamma = j.contains("gamma")
                  ? curve_from_json(j.at("gamma"), CurveRole::Growth, t0)
                  : p.gamma.with_t0(t0);
    p.delta = j.contains("delta")
                  ? curve_from_json(j.at("delta"), CurveRole::Growth, t0)
                  : p.delta.with_t0(t0);
    spec = p;
  } else if (kind == to_string(SystemKind::RescaledALM)) {
    check_keys({"gamma", "beta", "a", "mu"});
    RescaledAlmParams p;
    p.gamma = j.contains("gamma")
                  ? curve_from_json(j.at("gamma"), CurveRole::Growth, t0)
                  : p.gamma.with_t0(t0);
    p.beta = j.contains("beta")
                 ? curve_from_json(j.at("beta"), CurveRole::Growth, t0)
                 : p.beta.with_t0(t0);
    p.a = j.contains("a") ? curve_from_json(j.at("a"), CurveRole::Growth, t0)
                          : p.a.with_t0(t0);
    if (j.contains("mu")) p.mu = number(j.at("mu"), "mu");
    spec = p;
  } else {
    fail(ErrorKind::Input, "unknown system kind '" + kind + "'");
  }
  validate(spec);
  return spec;
}

Json state_to_json(const SystemState& s) {
  Json j;
  j["x"] = vec_to_json(s.x);
  j["y"] = vec_to_json(s.y);
  j["lam"] = vec_to_json(s.lam);
  j["vx"] = vec_to_json(s.vx);
  j["vy"] = vec_to_json(s.vy);
  if (s.vlam) j["vlam"] = vec_to_json(*s.vlam);
  return j;
}

SystemState state_from_json(const Json& j) {
  SystemState s;
  s.x = vec_from_json(require(j, "x", "initial"), "initial.x");
  s.y = vec_from_json(require(j, "y", "initial"), "initial.y");
  s.lam = vec_from_json(require(j, "lam", "initial"), "initial.lam");
  s.vx = vec_from_json(require(j, "vx", "initial"), "initial.vx");
  s.vy = vec_from_json(require(j, "vy", "initial"), "initial.vy");
  if (j.contains("vlam")) s.vlam = vec_from_json(j.at("vlam"), "initial.vlam");
  return s;
}

namespace {

Json verdict_to_json(const HypothesisVerdict& v) {
  Json j;
  j["applicable"] = v.applicable;
  j["ok"] = v.ok;
  Json conds = Json::array();
  for (const Condition& c : v.conditions) {
    conds.push_back({{"name", c.name}, {"holds", c.holds}, {"detail", c.detail}});
  }
  j["conditions"] = std::move(conds);
  return j;
}

}  // namespace

Json regime_to_json(const RegimeReport& r) {
  Json j;
  j["t0"] = r.t0;
  j["earliest_valid_t"] = r.earliest_valid_t;
  j["scaling_holds_from_t0"] = r.scaling_holds_from_t0;
  j["damping_ok"] = r.damping_ok;
  j["horizon_limited"] = r.horizon_limited;
  if (r.horizon_limited) j["horizon"] = r.horizon;
  j["rate_bounds"] = verdict_to_json(r.rate_bounds);
  j["minimal_properties"] = verdict_to_json(r.minimal_properties);
  j["strong_convergence"] = verdict_to_json(r.strong_convergence);
  if (r.power_rate) {
    j["power_rate"] = {{"case", to_string(r.power_rate->which)},
                  {"r1", r.power_rate->r1},
                  {"r2", r.power_rate->r2},
                  {"schedule_condition", r.power_rate->schedule_condition},
                  {"damping_condition", r.power_rate->damping_condition},
                  {"predicted_order", r.power_rate->predicted_order}};
  }
  return j;
}

Json rate_fit_to_json(const RateFit& fit) {
  Json j;
  j["window"] = {fit.window.lo, fit.window.hi};
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r2;
  j["samples"] = fit.samples;
  j["dropped"] = fit.dropped;
  return j;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const StateLayout& layout) {
  os << "t";
  auto block = [&](const char* name, int n) {
    for (int i = 0; i < n; ++i) os << ',' << name << '_' << i;
  };
  block("x", layout.n1);
  block("y", layout.n2);
  block("lam", layout.m);
  block("vx", layout.n1);
  block("vy", layout.n2);
  if (layout.dual_velocity) block("vlam", layout.m);
  os << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]);
    const Vec& s = traj.states[i];
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      os << ',' << format_double(s[k]);
    }
    os << '\n';
  }
}

void write_metrics_csv(std::ostream& os, const MetricSeries& m,
                       const EnergyReport* energy) {
  os << "t,lag_gap,phi_err,feas,gradf_gap,gradg_gap,minnorm_dist,E,Etilde,"
        "Ehat,corrected\n";
  const double nan = std::nan("");
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    os << format_double(m.times[i]) << ',' << format_double(m.lagrangian_gap[i])
       << ',' << format_double(m.phi_error[i]) << ','
       << format_double(m.feasibility[i]) << ','
       << format_double(m.grad_f_gap[i]) << ','
       << format_double(m.grad_g_gap[i]) << ','
       << format_double(m.minnorm_dist[i]);
    if (energy) {
      os << ',' << format_double(energy->E[i]) << ','
         << format_double(energy->Etilde[i]) << ','
         << format_double(energy->ehat_available ? energy->Ehat[i] : nan)
         << ',' << format_double(energy->corrected[i]);
    } else {
      os << ",nan,nan,nan,nan";
    }
    os << '\n';
  }
}

}  // namespace pdflow
