#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pdflow/analysis.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

using Json = nlohmann::ordered_json;

/// %.17g, with "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Pretty printer that renders every floating point number with 17
/// significant digits. Non-finite numbers become null.
std::string dump_json(const Json& j, int indent = 2);

Json problem_to_json(const SeparableProblem& prob);
SeparableProblem problem_from_json(const Json& j);

/// How the exponent of a power curve is stored. Eps curves are written as
/// c·t^(−r) with r ≥ 0; every other role stores c·t^r.
enum class CurveRole { Growth, Decay };

Json curve_to_json(const Curve& c, CurveRole role);
/// Accepts {"family": "power", "c", "r"}, {"family": "zero"} or a bare
/// number (constant curve).
Curve curve_from_json(const Json& j, CurveRole role, double t0);

Json system_to_json(const SystemSpec& spec);
SystemSpec system_from_json(const Json& j, double t0);

Json state_to_json(const SystemState& s);
SystemState state_from_json(const Json& j);

Json regime_to_json(const RegimeReport& r);
Json rate_fit_to_json(const RateFit& fit);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const StateLayout& layout);

/// Metric columns followed by energy columns; energies may be empty
/// (baseline systems) in which case those columns are nan.
void write_metrics_csv(std::ostream& os, const MetricSeries& m,
                       const EnergyReport* energy);

}  // namespace pdflow
