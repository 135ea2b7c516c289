#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/serialization.hpp"

namespace pdflow {

struct ProblemRef {
  /// "example1", "example2", "random_qp" or "inline".
  std::string source = "example2";
  /// m, n, e, d for example1.
  std::vector<double> params;
  std::uint64_t seed = 0;
  builtin::RandomQpDims dims;
  /// Problem document when source == "inline".
  Json inline_problem;

  SeparableProblem build() const;
};

struct RunSpec {
  std::string name = "run";
  ProblemRef problem;
  SystemSpec system = TikhonovParams{};
  double t0 = 1.0;
  double T = 100.0;
  /// Unset means every block starts at 1.
  std::optional<SystemState> initial;
  IntegratorConfig integrator;
  int samples = 200;
  std::string out_dir;
  bool charts = false;
};

/// A named list of runs; `run` uses exactly one, `compare` any number.
struct Job {
  std::string name;
  std::vector<RunSpec> runs;
};

/// Parses a run document, or {"name", "runs": [...]} for a job. Missing
/// fields take their defaults. Throws Input errors on schema violations.
Job job_from_json(const Json& j);
RunSpec run_from_json(const Json& j);

/// Every field made explicit, including the resolved initial state and
/// h_max. Parsing the result yields an identical run.
Json resolved_json(const RunSpec& spec);
Json resolved_json(const Job& job);

SystemState default_initial_state(const SeparableProblem& prob,
                                  SystemKind kind);

struct PresetOptions {
  std::optional<double> r;
  std::optional<bool> eps_on;
  std::optional<std::vector<double>> params;
};

/// example1-fig1, example1-strong, example2-tikhonov,
/// example2-second-order-dual, example2-rescaled-alm, example2-compare,
/// power-rate.
Job preset(const std::string& name, const PresetOptions& opts = {});
std::vector<std::string> preset_names();

/// Default sweep grid attached to a preset, if any ("path=v1,v2,...").
std::optional<std::string> preset_default_grid(const std::string& name);

struct SweepGrid {
  std::vector<std::string> path;
  std::vector<double> values;
};

/// Parses "system.eps.r=1.2,1.4". Throws Input errors on malformed text.
SweepGrid parse_grid(const std::string& text);

/// Copy of `base` with the dotted path set to `value`.
RunSpec apply_grid_value(const RunSpec& base, const SweepGrid& grid,
                         double value);

}  // namespace pdflow
