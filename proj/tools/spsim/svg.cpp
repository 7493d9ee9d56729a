#include "svg.hpp"

#include "spsim/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace spsim::app {

namespace {

constexpr double kWidth = 640, kPanel = 300, kLeft = 70, kRight = 20, kTop = 30, kBottom = 45;

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

}  // namespace

std::string render_svg(const std::vector<Plot>& panels) {
  const double height = kPanel * static_cast<double>(panels.size());
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, height);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& plot = panels[p];
    const double y0 = kPanel * static_cast<double>(p);
    auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (plot.log_y && !(s.y[i] > 0.0)) continue;
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, ty(s.y[i]));
        ymax = std::max(ymax, ty(s.y[i]));
      }
    if (!std::isfinite(xmin)) continue;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double w = kWidth - kLeft - kRight, h = kPanel - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * w; };
    auto py = [&](double y) { return y0 + kTop + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * h; };

    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n", kWidth / 2,
                       y0 + 18, escape(plot.title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                       y0 + kTop, w, h);
    for (int t = 0; t <= 4; ++t) {
      const double fx = xmin + (xmax - xmin) * t / 4.0;
      const double fy = ymin + (ymax - ymin) * t / 4.0;
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(fx),
                         y0 + kTop + h + 14, fx);
      const double label = plot.log_y ? std::pow(10.0, fy) : fy;
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 4,
                         y0 + kTop + (1.0 - t / 4.0) * h + 4, label);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + w / 2,
                       y0 + kPanel - 8, escape(plot.x_label));
    out += fmt::format("<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
                       y0 + kTop + h / 2, y0 + kTop + h / 2, escape(plot.y_label));
    int legend = 0;
    for (const auto& s : plot.series) {
      if (s.markers) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (plot.log_y && !(s.y[i] > 0.0)) continue;
          out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"none\" stroke=\"{}\"/>\n", px(s.x[i]),
                             py(s.y[i]), s.color);
        }
      } else {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (plot.log_y && !(s.y[i] > 0.0)) continue;
          pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
        }
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"{}\"/>\n", s.color, pts);
      }
      if (!s.label.empty()) {
        out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\" text-anchor=\"end\">{}</text>\n", kWidth - kRight - 6,
                           y0 + kTop + 14 + 14 * legend, s.color, escape(s.label));
        ++legend;
      }
    }
  }
  out += "</svg>\n";
  return out;
}

void write_svg(const std::filesystem::path& path, const std::vector<Plot>& panels) {
  auto os = io::open_output(path);
  os << render_svg(panels);
}

}  // namespace spsim::app
