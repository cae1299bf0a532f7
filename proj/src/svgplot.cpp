#include "herdmetric/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace herdmetric::svgplot {

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 560;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#17becf", "#e377c2", "#7f7f7f", "#bcbd22"};
constexpr int kPaletteSize = 10;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Scale {
  double lo, hi;
  double px0, px1;
  double operator()(double v) const {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return px0 + t * (px1 - px0);
  }
};

void axes(std::string& svg, const Scale& sx, const Scale& sy, const std::string& title,
          const std::string& x_label, const std::string& y_label) {
  svg += "<rect x='0' y='0' width='" + std::to_string(kWidth) + "' height='" +
         std::to_string(kHeight) + "' fill='white'/>\n";
  svg += "<text x='" + std::to_string(kWidth / 2) + "' y='28' text-anchor='middle' "
         "font-size='18' font-family='sans-serif'>" + title + "</text>\n";
  // frame
  svg += "<line x1='" + num(sx.px0) + "' y1='" + num(sy.px0) + "' x2='" + num(sx.px1) +
         "' y2='" + num(sy.px0) + "' stroke='black'/>\n";
  svg += "<line x1='" + num(sx.px0) + "' y1='" + num(sy.px0) + "' x2='" + num(sx.px0) +
         "' y2='" + num(sy.px1) + "' stroke='black'/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fx = sx.lo + (sx.hi - sx.lo) * t / 5.0;
    const double fy = sy.lo + (sy.hi - sy.lo) * t / 5.0;
    const double px = sx(fx);
    const double py = sy(fy);
    svg += "<line x1='" + num(px) + "' y1='" + num(sy.px0) + "' x2='" + num(px) + "' y2='" +
           num(sy.px0 + 5) + "' stroke='black'/>\n";
    svg += "<text x='" + num(px) + "' y='" + num(sy.px0 + 22) +
           "' text-anchor='middle' font-size='12' font-family='sans-serif'>" + num(fx) +
           "</text>\n";
    svg += "<line x1='" + num(sx.px0 - 5) + "' y1='" + num(py) + "' x2='" + num(sx.px0) +
           "' y2='" + num(py) + "' stroke='black'/>\n";
    svg += "<text x='" + num(sx.px0 - 10) + "' y='" + num(py + 4) +
           "' text-anchor='end' font-size='12' font-family='sans-serif'>" + num(fy) +
           "</text>\n";
  }
  svg += "<text x='" + std::to_string((kMarginLeft + kWidth - kMarginRight) / 2) + "' y='" +
         std::to_string(kHeight - 15) +
         "' text-anchor='middle' font-size='14' font-family='sans-serif'>" + x_label +
         "</text>\n";
  svg += "<text x='20' y='" + std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) +
         "' text-anchor='middle' font-size='14' font-family='sans-serif' transform='rotate(-90 "
         "20 " + std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) + ")'>" +
         y_label + "</text>\n";
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = s.y_lo.size() == s.x.size() ? s.y_lo[i] : s.y[i];
      const double hi = s.y_hi.size() == s.x.size() ? s.y_hi[i] : s.y[i];
      if (first) {
        xlo = xhi = s.x[i];
        ylo = lo;
        yhi = hi;
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, lo);
      yhi = std::max(yhi, hi);
    }
  }
  const double pad = (yhi - ylo) * 0.05 + 1e-9;
  ylo -= pad;
  yhi += pad;

  const Scale sx{xlo, xhi, kMarginLeft, kWidth - kMarginRight};
  const Scale sy{ylo, yhi, kHeight - kMarginBottom, kMarginTop};

  std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                    std::to_string(kWidth) + "' height='" + std::to_string(kHeight) + "'>\n";
  axes(svg, sx, sy, title, x_label, y_label);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    if (s.y_lo.size() == s.x.size() && s.y_hi.size() == s.x.size()) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double px = sx(s.x[i]);
        svg += "<line x1='" + num(px) + "' y1='" + num(sy(s.y_lo[i])) + "' x2='" + num(px) +
               "' y2='" + num(sy(s.y_hi[i])) + "' stroke='" + color +
               "' stroke-width='1' opacity='0.6'/>\n";
      }
    }
    svg += "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='2' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      svg += num(sx(s.x[i])) + "," + num(sy(s.y[i]));
      if (i + 1 < s.x.size()) svg += " ";
    }
    svg += "'/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg += "<circle cx='" + num(sx(s.x[i])) + "' cy='" + num(sy(s.y[i])) + "' r='3' fill='" +
             color + "'/>\n";
    // legend
    const double ly = kMarginTop + 20.0 * si;
    const double lx = kWidth - kMarginRight + 15;
    svg += "<line x1='" + num(lx) + "' y1='" + num(ly) + "' x2='" + num(lx + 24) + "' y2='" +
           num(ly) + "' stroke='" + color + "' stroke-width='2'/>\n";
    svg += "<text x='" + num(lx + 30) + "' y='" + num(ly + 4) +
           "' font-size='13' font-family='sans-serif'>" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string scatter_plot(const std::vector<ScatterGroup>& groups, const std::string& title) {
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const ScatterGroup& g : groups) {
    for (const auto& [x, y] : g.points) {
      if (first) {
        xlo = xhi = x;
        ylo = yhi = y;
        first = false;
      }
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  const double padx = (xhi - xlo) * 0.05 + 1e-9;
  const double pady = (yhi - ylo) * 0.05 + 1e-9;

  const Scale sx{xlo - padx, xhi + padx, kMarginLeft, kWidth - kMarginRight};
  const Scale sy{ylo - pady, yhi + pady, kHeight - kMarginBottom, kMarginTop};

  std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                    std::to_string(kWidth) + "' height='" + std::to_string(kHeight) + "'>\n";
  axes(svg, sx, sy, title, "component 1", "component 2");
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const ScatterGroup& g = groups[gi];
    const char* color = kPalette[gi % kPaletteSize];
    for (const auto& [x, y] : g.points) {
      if (g.highlight)
        svg += "<circle cx='" + num(sx(x)) + "' cy='" + num(sy(y)) +
               "' r='4' fill='none' stroke='" + color + "' stroke-width='1.5'/>\n";
      else
        svg += "<circle cx='" + num(sx(x)) + "' cy='" + num(sy(y)) + "' r='3' fill='" + color +
               "'/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string pr_curve(const std::vector<std::pair<double, double>>& recall_precision,
                     const std::string& title) {
  Series s;
  s.label = "precision";
  for (const auto& [r, p] : recall_precision) {
    s.x.push_back(r);
    s.y.push_back(p);
  }
  return line_plot({s}, title, "recall", "precision");
}

}  // namespace herdmetric::svgplot
