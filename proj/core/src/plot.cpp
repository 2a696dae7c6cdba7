#include "hkflow/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace hkflow::plot {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 700.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 392.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void absorb(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Degenerate or empty ranges get a unit pad so the mapping stays finite.
  void finalize() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-300) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double map(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_line_svg(const std::string& title,
                    const std::vector<Series>& series, std::ostream& out) {
  Range rx;
  Range ry;
  for (const auto& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        rx.absorb(s.x[i]);
        ry.absorb(s.y[i]);
      }
    }
  }
  rx.finalize();
  ry.finalize();

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << 0.5 * kWidth
      << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
         "text-anchor=\"middle\">"
      << title << "</text>\n";

  // Frame and ticks.
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kRight - kLeft << "\" height=\"" << kBottom - kTop
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double px = rx.map(fx, kLeft, kRight);
    const double py = ry.map(fy, kBottom, kTop);
    out << "<line x1=\"" << px << "\" y1=\"" << kBottom << "\" x2=\"" << px
        << "\" y2=\"" << kBottom + 5 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kBottom + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << fmt(fx) << "</text>\n";
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\""
        << kLeft << "\" y2=\"" << py << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">"
        << fmt(fy) << "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    bool open = false;
    std::ostringstream pts;
    auto flush = [&]() {
      if (open) {
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
      }
      open = false;
      pts.str("");
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts << rx.map(s.x[i], kLeft, kRight) << ","
          << ry.map(s.y[i], kBottom, kTop) << " ";
      open = true;
    }
    flush();
    if (!s.label.empty()) {
      const double ly = kTop + 16.0 + 16.0 * static_cast<double>(si);
      out << "<line x1=\"" << kRight - 120 << "\" y1=\"" << ly << "\" x2=\""
          << kRight - 96 << "\" y2=\"" << ly << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
      out << "<text x=\"" << kRight - 90 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
          << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace hkflow::plot
