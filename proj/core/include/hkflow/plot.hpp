#pragma once

// Minimal self-contained SVG line plots for margin tables and scan series.
// No external renderer: fixed viewport, linear axes, one polyline per
// series. Non-finite samples split a series into separate segments.

#include <iosfwd>
#include <string>
#include <vector>

namespace hkflow::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_svg(const std::string& title,
                    const std::vector<Series>& series, std::ostream& out);

}  // namespace hkflow::plot
