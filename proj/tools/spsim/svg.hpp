#pragma once

// Minimal static line/marker plots as SVG, one panel per plot stacked
// vertically.

#include <filesystem>
#include <string>
#include <vector>

namespace spsim::app {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool markers = false;
  std::string label;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

std::string render_svg(const std::vector<Plot>& panels);
void write_svg(const std::filesystem::path& path, const std::vector<Plot>& panels);

}  // namespace spsim::app
