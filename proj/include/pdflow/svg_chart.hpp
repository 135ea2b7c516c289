#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pdflow {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  int width = 720;
  int height = 460;
};

/// Static SVG line plot. Points that are non-finite, or non-positive on a
/// log axis, are dropped and break the polyline.
std::string render_line_chart(const std::vector<ChartSeries>& series,
                              const ChartOptions& opts);

void write_line_chart(const std::filesystem::path& path,
                      const std::vector<ChartSeries>& series,
                      const ChartOptions& opts);

}  // namespace pdflow
