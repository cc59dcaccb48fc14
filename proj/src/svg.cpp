#include "cch/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cch/errors.hpp"

namespace cch {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
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

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Tick spacing of 1, 2 or 5 times a power of ten covering the range.
std::vector<double> nice_ticks(double lo, double hi, int target) {
  std::vector<double> ticks;
  if (!(hi > lo)) {
    ticks.push_back(lo);
    return ticks;
  }
  const double raw = (hi - lo) / std::max(target, 2);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) {
      step = mag * mult;
      break;
    }
  }
  const double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + 0.5 * step; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series, int width,
                              int height) {
  if (series.empty()) {
    throw InvalidArgumentError("render_line_chart: needs at least one series");
  }
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw InvalidArgumentError(
          "render_line_chart: series must pair x and y of equal nonzero length");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw InvalidArgumentError("render_line_chart: non-finite data point");
      }
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        first = false;
      } else {
        x_lo = std::min(x_lo, s.x[i]);
        x_hi = std::max(x_hi, s.x[i]);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  // Pad the y range so extreme points do not sit on the frame.
  const double y_pad = 0.06 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  const double ml = 86.0, mr = 24.0, mt = 46.0, mb = 58.0;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  const auto to_px = [&](double x, double y) {
    const double px = ml + (x - x_lo) / (x_hi - x_lo) * pw;
    const double py = mt + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph;
    return std::pair<double, double>(px, py);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2.0 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">"
      << escape_xml(title) << "</text>\n";

  // Grid and ticks.
  for (double t : nice_ticks(x_lo, x_hi, 7)) {
    const auto [px, py0] = to_px(t, y_lo);
    svg << "<line x1=\"" << px << "\" y1=\"" << mt << "\" x2=\"" << px << "\" y2=\""
        << mt + ph << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << px << "\" y=\"" << mt + ph + 18.0
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_number(t) << "</text>\n";
    (void)py0;
  }
  for (double t : nice_ticks(y_lo, y_hi, 6)) {
    const auto [px0, py] = to_px(x_lo, t);
    svg << "<line x1=\"" << ml << "\" y1=\"" << py << "\" x2=\"" << ml + pw
        << "\" y2=\"" << py << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << ml - 8.0 << "\" y=\"" << py + 4.0
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_number(t) << "</text>\n";
    (void)px0;
  }
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#404040\" "
      << "stroke-width=\"1\"/>\n";

  // Axis labels.
  svg << "<text x=\"" << ml + pw / 2.0 << "\" y=\"" << height - 14.0
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << mt + ph / 2.0
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 20 " << mt + ph / 2.0 << ")\">" << escape_xml(y_label)
      << "</text>\n";

  // Series.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    std::ostringstream points;
    for (std::size_t i = 0; i < series[si].x.size(); ++i) {
      const auto [px, py] = to_px(series[si].x[i], series[si].y[i]);
      if (i > 0) points << " ";
      points << px << "," << py;
    }
    svg << "<polyline points=\"" << points.str() << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < series[si].x.size(); ++i) {
      const auto [px, py] = to_px(series[si].x[i], series[si].y[i]);
      svg << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
  }

  // Legend, top-right inside the frame.
  const double legend_x = ml + pw - 180.0;
  double legend_y = mt + 12.0;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    svg << "<line x1=\"" << legend_x << "\" y1=\"" << legend_y << "\" x2=\""
        << legend_x + 26.0 << "\" y2=\"" << legend_y << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << legend_x + 32.0 << "\" y=\"" << legend_y + 4.0
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(series[si].label) << "</text>\n";
    legend_y += 18.0;
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cch
