#pragma once

// Output files: CSV tables with '#' metadata headers and small self-contained
// SVG line plots. Formatting is deterministic so fixed-seed runs reproduce
// byte-identical files.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ppcs {

inline constexpr const char* kToolVersion = "0.1.0";

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct OutputMetadata {
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;
  // full effective config, echoed key by key
  std::vector<std::pair<std::string, std::string>> config;
};

namespace detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void write_metadata(std::ostream& os, const OutputMetadata& meta) {
  os << "# ppcs " << kToolVersion << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, meta.scenario_hash);
  os << "# scenario_hash " << buf << "\n";
  if (meta.has_seed) os << "# seed " << meta.seed << "\n";
  for (const auto& [k, v] : meta.config) os << "# " << k << " " << v << "\n";
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string csv_to_string(const OutputMetadata& meta, const CsvTable& table) {
  std::ostringstream os;
  detail::write_metadata(os, meta);
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw IoError("csv row width does not match column count");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << detail::fmt_g(row[i]);
    os << "\n";
  }
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  if (!f) throw IoError("write failed for " + path);
}

inline void write_csv(const std::string& path, const OutputMetadata& meta,
                      const CsvTable& table) {
  write_text_file(path, csv_to_string(meta, table));
}

// ---------------------------------------------------------------------------
// SVG plots

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  bool dashed = false;
  std::vector<double> x, y;
};

struct SvgPlotOptions {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  int width = 760, height = 480;
  std::vector<double> vertical_markers;  // data-space x positions
};

namespace detail {

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double to_unit(double v) const {
    double a = log ? std::log10(v) : v;
    double l = log ? std::log10(lo) : lo;
    double h = log ? std::log10(hi) : hi;
    if (h == l) return 0.5;
    return (a - l) / (h - l);
  }
};

inline AxisScale fit_axis(const std::vector<const std::vector<double>*>& arrays,
                          bool log) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto* arr : arrays) {
    for (double v : *arr) {
      if (!std::isfinite(v)) continue;
      if (log && v <= 0.0) continue;
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any) {
    lo = log ? 0.1 : 0.0;
    hi = 1.0;
  }
  if (lo == hi) {
    lo = log ? lo / 2.0 : lo - 1.0;
    hi = log ? hi * 2.0 : hi + 1.0;
  }
  return {lo, hi, log};
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline std::string svg_plot_to_string(const SvgPlotOptions& opt,
                                      const std::vector<SvgSeries>& series) {
  using namespace detail;
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  AxisScale ax = fit_axis(xs, opt.log_x);
  AxisScale ay = fit_axis(ys, opt.log_y);
  auto px = [&](double v) { return ml + ax.to_unit(v) * pw; };
  auto py = [&](double v) { return mt + (1.0 - ay.to_unit(v)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
     << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << " "
     << opt.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  // axis ticks: 6 per axis, grid lines
  for (int i = 0; i <= 5; ++i) {
    double u = i / 5.0;
    double gx = ml + u * pw;
    double gy = mt + (1.0 - u) * ph;
    double vx, vy;
    if (ax.log) {
      double l = std::log10(ax.lo), h = std::log10(ax.hi);
      vx = std::pow(10.0, l + u * (h - l));
    } else {
      vx = ax.lo + u * (ax.hi - ax.lo);
    }
    if (ay.log) {
      double l = std::log10(ay.lo), h = std::log10(ay.hi);
      vy = std::pow(10.0, l + u * (h - l));
    } else {
      vy = ay.lo + u * (ay.hi - ay.lo);
    }
    os << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx << "\" y2=\""
       << mt + ph << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << ml + pw
       << "\" y2=\"" << gy << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << gx << "\" y=\"" << mt + ph + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_g(vx) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << gy + 4
       << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_g(vy) << "</text>\n";
  }
  for (double m : opt.vertical_markers) {
    if ((opt.log_x && m <= 0.0) || m < ax.lo || m > ax.hi) continue;
    os << "<line x1=\"" << px(m) << "\" y1=\"" << mt << "\" x2=\"" << px(m)
       << "\" y2=\"" << mt + ph
       << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  int legend_row = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      double yv = s.y[i], xv = s.x[i];
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      if (opt.log_x && xv <= 0.0) continue;
      if (opt.log_y && yv <= 0.0) yv = ay.lo;
      os << fmt_g(px(xv)) << "," << fmt_g(py(yv)) << " ";
    }
    os << "\"/>\n";
    if (!s.label.empty()) {
      double lx = ml + pw - 150, ly = mt + 16 + 16 * legend_row++;
      os << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 24
         << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << "/>\n";
      os << "<text x=\"" << lx + 30 << "\" y=\"" << ly
         << "\" font-size=\"12\">" << svg_escape(s.label) << "</text>\n";
    }
  }
  os << "<text x=\"" << opt.width / 2.0 << "\" y=\"22\" font-size=\"15\" "
        "text-anchor=\"middle\">"
     << svg_escape(opt.title) << "</text>\n";
  os << "<text x=\"" << ml + pw / 2.0 << "\" y=\"" << opt.height - 14
     << "\" font-size=\"13\" text-anchor=\"middle\">" << svg_escape(opt.x_label)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2.0
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << mt + ph / 2.0 << ")\">" << svg_escape(opt.y_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

inline void write_svg_plot(const std::string& path, const SvgPlotOptions& opt,
                           const std::vector<SvgSeries>& series) {
  write_text_file(path, svg_plot_to_string(opt, series));
}

}  // namespace ppcs
