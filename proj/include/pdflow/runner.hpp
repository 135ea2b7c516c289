#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdflow/analysis.hpp"
#include "pdflow/runspec.hpp"

namespace pdflow {

struct NamedFit {
  std::string series;
  std::optional<RateFit> fit;
  std::string error;
};

struct RunResult {
  RunSpec spec;
  SeparableProblem problem;
  ReferenceSolution refs;
  StateLayout layout;
  Trajectory trajectory;
  MetricSeries metrics;
  /// Present for the Tikhonov system only.
  std::optional<EnergyReport> energy;
  std::optional<IntegralEstimates> integrals;
  std::optional<RegimeReport> regime;
  std::optional<TikhonovPathSeries> path;
  std::vector<NamedFit> fits;
  std::vector<std::string> warnings;
};

/// Solves the reference problem, integrates and post-processes one run.
RunResult execute(const RunSpec& spec);

/// trajectory.csv, metrics.csv, report.json, resolved_spec.json and, when
/// requested, SVG charts derived from the CSV files.
void write_artifacts(const RunResult& result, const std::filesystem::path& dir,
                     bool charts);

Json report_json(const RunResult& result);

/// Fraction of each running integral accumulated over [T/10, T]
/// (falling back to [T−10, T] when T/10 < t0).
struct SaturationReport {
  double velocity = 0.0;
  double scaled_gap = 0.0;
  double tikhonov = 0.0;
  double feasibility = 0.0;
};
SaturationReport last_decade_fraction(const IntegralEstimates& est);

/// Reads a numeric CSV with a header row into named columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Final metric values of several runs, one row per run.
void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<RunResult>& results);

/// Worker count for sweeps: PDFLOW_THREADS if set and positive, else the
/// hardware concurrency, never more than `cells`.
unsigned sweep_threads(std::size_t cells);

}  // namespace pdflow
