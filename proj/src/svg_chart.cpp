#include "pdflow/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* f = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }

  void fit(double mn, double mx) {
    lo = map(mn);
    hi = map(mx);
    if (log) {
      lo = std::floor(lo);
      hi = std::ceil(hi);
    }
    if (!(hi > lo)) {
      const double pad = std::max(std::abs(lo) * 0.1, 0.5);
      lo -= pad;
      hi += pad;
    }
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>((hi - lo) / 8.0 + 0.999));
      for (double e = lo; e <= hi + 1e-9; e += step) out.push_back(e);
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span;
         v += step) {
      out.push_back(v);
    }
    return out;
  }

  std::string label(double tick) const {
    if (log) return "1e" + fmt(tick, "%.0f");
    return fmt(tick, "%g");
  }
};

bool usable(double v, bool log) {
  return std::isfinite(v) && (!log || v > 0.0);
}

}  // namespace

std::string render_line_chart(const std::vector<ChartSeries>& series,
                              const ChartOptions& opts) {
  const double inf = std::numeric_limits<double>::infinity();
  double xmin = inf, xmax = -inf, ymin = inf, ymax = -inf;
  for (const ChartSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], opts.log_x) || !usable(s.y[i], opts.log_y)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  const bool empty = !(xmax >= xmin);
  Axis ax{opts.log_x}, ay{opts.log_y};
  if (!empty) {
    ax.fit(xmin, xmax);
    ay.fit(ymin, ymax);
  }

  const double left = 80, right = 170, top = 40, bottom = 55;
  const double pw = opts.width - left - right;
  const double ph = opts.height - top - bottom;
  auto px = [&](double v) { return left + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double v) {
    return top + ph - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * ph;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width
     << "\" height=\"" << opts.height << "\" font-family=\"sans-serif\" "
     << "font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-size=\"15\">" << escape(opts.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";

  if (empty) {
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << top + ph / 2
       << "\" text-anchor=\"middle\">no plottable data</text>\n</svg>\n";
    return os.str();
  }

  for (double t : ax.ticks()) {
    const double x = left + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << top << "\" x2=\"" << fmt(x)
       << "\" y2=\"" << top + ph << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << fmt(x) << "\" y=\"" << top + ph + 16
       << "\" text-anchor=\"middle\">" << ax.label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(y) << "\" x2=\""
       << left + pw << "\" y2=\"" << fmt(y) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(y + 4)
       << "\" text-anchor=\"end\">" << ay.label(t) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << opts.height - 14
     << "\" text-anchor=\"middle\">" << escape(opts.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(opts.y_label)
     << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const ChartSeries& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.6\" points=\"" << pts << "\"/>\n";
        pts.clear();
      }
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], opts.log_x) || !usable(s.y[i], opts.log_y)) {
        flush();
        continue;
      }
      pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    flush();
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
       << left + pw + 32 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">"
       << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_line_chart(const std::filesystem::path& path,
                      const std::vector<ChartSeries>& series,
                      const ChartOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Input, "cannot write " + path.string());
  out << render_line_chart(series, opts);
}

}  // namespace pdflow
