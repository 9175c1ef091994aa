#include "dockpilot/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dockpilot {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto extend = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  };
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) extend(s.x[i], s.y[i]);
  for (const auto& b : spec.boxes) {
    extend(b[0], b[1]);
    extend(b[2], b[3]);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double px = 0.04 * (x1 - x0), py = 0.06 * (y1 - y0);
  x0 -= px, x1 += px, y0 -= py, y1 += py;

  double sx = (kWidth - kLeft - kRight) / (x1 - x0);
  double sy = (kHeight - kTop - kBottom) / (y1 - y0);
  if (spec.equal_aspect) {
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    sx = sy = s;
    const double hw = 0.5 * (kWidth - kLeft - kRight) / s, hh = 0.5 * (kHeight - kTop - kBottom) / s;
    x0 = cx - hw, x1 = cx + hw, y0 = cy - hh, y1 = cy + hh;
  }
  auto X = [&](double x) { return kLeft + (x - x0) * sx; };
  auto Y = [&](double y) { return kHeight - kBottom - (y - y0) * sy; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
     << "</text>\n";

  const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs)
    os << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(Y(y0)) << "\" x2=\"" << num(X(t)) << "\" y2=\"" << num(Y(y1))
       << "\" stroke=\"#eee\"/>\n<text x=\"" << num(X(t)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys)
    os << "<line x1=\"" << num(X(x0)) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(X(x1)) << "\" y2=\"" << num(Y(t))
       << "\" stroke=\"#eee\"/>\n<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(Y(t) + 4)
       << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
     << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << kLeft + 0.5 * (kWidth - kLeft - kRight) << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + 0.5 * (kHeight - kTop - kBottom)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  for (const auto& b : spec.boxes)
    os << "<rect x=\"" << num(X(std::min(b[0], b[2]))) << "\" y=\"" << num(Y(std::max(b[1], b[3]))) << "\" width=\""
       << num(std::abs(b[2] - b[0]) * sx) << "\" height=\"" << num(std::abs(b[3] - b[1]) * sy)
       << "\" fill=\"#bbb\" stroke=\"#777\"/>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.points) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i])) << "\" r=\"2\" fill=\"" << color
             << "\" fill-opacity=\"0.6\"/>\n";
    } else if (n > 0) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << num(X(s.x[i])) << ',' << num(Y(s.y[i])) << ' ';
      os << "\"/>\n";
    }
    const double ly = kTop + 14 + 16 * static_cast<double>(k);
    os << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/>\n<text x=\"" << kWidth - kRight - 135 << "\" y=\"" << ly << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dockpilot
