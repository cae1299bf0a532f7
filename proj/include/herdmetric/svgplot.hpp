#pragma once

#include <string>
#include <utility>
#include <vector>

namespace herdmetric::svgplot {

// Hand-emitted SVG so plot files stay dependency-free and diffable.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  // Optional whisker extents per point (same length as x when present).
  std::vector<double> y_lo;
  std::vector<double> y_hi;
};

// One polyline per series, with min/max whiskers where provided.
std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

struct ScatterGroup {
  std::string label;
  bool highlight = false;  // drawn hollow (e.g. unknown classes)
  std::vector<std::pair<double, double>> points;
};

std::string scatter_plot(const std::vector<ScatterGroup>& groups, const std::string& title);

std::string pr_curve(const std::vector<std::pair<double, double>>& recall_precision,
                     const std::string& title);

}  // namespace herdmetric::svgplot
