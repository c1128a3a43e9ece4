#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pushpull {

// Minimal hand-rolled SVG line plots: two side-by-side panels with a shared
// log10 y-axis (metric vs iterations and metric vs communication bits, the
// usual pairing for convergence traces). CSV remains the authoritative
// artifact; this is a quick-look rendering.

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), y > 0 plotted
};

namespace svg_detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

struct Panel {
  double x0, y0, w, h;  // drawing area in svg coordinates
  double xmin = 0, xmax = 1, lymin = 0, lymax = 1;

  double sx(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double sy(double ly) const { return y0 + h - (ly - lymin) / (lymax - lymin) * h; }
};

inline void draw_panel(std::string& out, Panel& panel, const std::vector<PlotSeries>& series,
                       const std::string& xlabel, const std::string& ylabel, bool legend) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(x)) continue;
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (!any) {
    xmin = 0;
    xmax = 1;
    ymin = 0.1;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  panel.xmin = xmin;
  panel.xmax = xmax;
  panel.lymin = std::floor(std::log10(ymin));
  panel.lymax = std::ceil(std::log10(ymax));
  if (panel.lymax <= panel.lymin) panel.lymax = panel.lymin + 1;

  out += "<rect x='" + fmt(panel.x0) + "' y='" + fmt(panel.y0) + "' width='" + fmt(panel.w) +
         "' height='" + fmt(panel.h) + "' fill='white' stroke='#333'/>\n";

  // y ticks at integer decades (thinned to at most ~8 labels)
  const int decades = static_cast<int>(panel.lymax - panel.lymin);
  const int ystride = std::max(1, (decades + 7) / 8);
  for (int d = 0; d <= decades; d += ystride) {
    const double ly = panel.lymin + d;
    const double y = panel.sy(ly);
    out += "<line x1='" + fmt(panel.x0) + "' y1='" + fmt(y) + "' x2='" + fmt(panel.x0 + panel.w) +
           "' y2='" + fmt(y) + "' stroke='#ddd'/>\n";
    out += "<text x='" + fmt(panel.x0 - 6) + "' y='" + fmt(y + 4) +
           "' text-anchor='end' font-size='11'>1e" + fmt(ly, "%.0f") + "</text>\n";
  }
  // x ticks
  for (int t = 0; t <= 4; ++t) {
    const double x = xmin + (xmax - xmin) * t / 4.0;
    const double sx = panel.sx(x);
    out += "<line x1='" + fmt(sx) + "' y1='" + fmt(panel.y0 + panel.h) + "' x2='" + fmt(sx) +
           "' y2='" + fmt(panel.y0 + panel.h + 4) + "' stroke='#333'/>\n";
    out += "<text x='" + fmt(sx) + "' y='" + fmt(panel.y0 + panel.h + 16) +
           "' text-anchor='middle' font-size='11'>" + fmt(x, "%.3g") + "</text>\n";
  }
  out += "<text x='" + fmt(panel.x0 + panel.w / 2) + "' y='" + fmt(panel.y0 + panel.h + 32) +
         "' text-anchor='middle' font-size='12'>" + xlabel + "</text>\n";
  out += "<text x='" + fmt(panel.x0 - 48) + "' y='" + fmt(panel.y0 + panel.h / 2) +
         "' font-size='12' transform='rotate(-90 " + fmt(panel.x0 - 48) + " " +
         fmt(panel.y0 + panel.h / 2) + ")' text-anchor='middle'>" + ylabel + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    std::string pts;
    for (const auto& [x, y] : series[si].points) {
      if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(x)) continue;
      pts += fmt(panel.sx(x)) + "," + fmt(panel.sy(std::log10(y))) + " ";
    }
    if (pts.empty()) continue;
    out += "<polyline fill='none' stroke='" + std::string(palette(si)) +
           "' stroke-width='1.5' points='" + pts + "'/>\n";
  }
  if (legend) {
    double ly = panel.y0 + 14;
    for (std::size_t si = 0; si < series.size(); ++si) {
      const double lx = panel.x0 + panel.w - 150;
      out += "<line x1='" + fmt(lx) + "' y1='" + fmt(ly - 4) + "' x2='" + fmt(lx + 22) + "' y2='" +
             fmt(ly - 4) + "' stroke='" + std::string(palette(si)) + "' stroke-width='2'/>\n";
      out += "<text x='" + fmt(lx + 28) + "' y='" + fmt(ly) + "' font-size='11'>" +
             series[si].name + "</text>\n";
      ly += 15;
    }
  }
}

}  // namespace svg_detail

// series_vs_k and series_vs_bits carry the same runs with different x-axes.
inline void write_two_panel_svg(const std::string& path, const std::string& title,
                                const std::string& ylabel,
                                const std::vector<PlotSeries>& series_vs_k,
                                const std::vector<PlotSeries>& series_vs_bits) {
  const double W = 980, H = 440;
  std::string out;
  out += "<svg xmlns='http://www.w3.org/2000/svg' width='" + svg_detail::fmt(W) + "' height='" +
         svg_detail::fmt(H) + "' viewBox='0 0 " + svg_detail::fmt(W) + " " + svg_detail::fmt(H) +
         "'>\n";
  out += "<rect width='" + svg_detail::fmt(W) + "' height='" + svg_detail::fmt(H) +
         "' fill='white'/>\n";
  out += "<text x='" + svg_detail::fmt(W / 2) + "' y='20' text-anchor='middle' font-size='14'>" +
         title + "</text>\n";
  svg_detail::Panel left{70, 40, 380, 330};
  svg_detail::Panel right{560, 40, 380, 330};
  svg_detail::draw_panel(out, left, series_vs_k, "iteration k", ylabel, true);
  svg_detail::draw_panel(out, right, series_vs_bits, "cumulative bits", ylabel, false);
  out += "</svg>\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("svg: cannot open " + tmp);
    os << out;
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("svg: cannot rename " + tmp + " to " + path);
}

}  // namespace pushpull
