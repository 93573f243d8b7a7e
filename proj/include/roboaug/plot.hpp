// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "roboaug/image.hpp"

namespace roboaug {

// Minimal chart rendering onto an RGB canvas, written out as PPM. Enough for
// the sweep curve and the per-category AP bar chart; no external deps.
class Canvas {
 public:
  Canvas(int height, int width, std::uint8_t bg = 255);

  void fill_rect(int y0, int x0, int y1, int x1, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);
  void line(int y0, int x0, int y1, int x1, std::uint8_t r, std::uint8_t g,
            std::uint8_t b);
  // 5x7 bitmap glyphs: digits, '.', '-', ':', and uppercase A-Z.
  void text(int y, int x, const std::string& s, std::uint8_t r = 0,
            std::uint8_t g = 0, std::uint8_t b = 0);
  void save(const std::string& path) const;
  const Image& image() const { return img_; }

 private:
  Image img_;
};

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series,
                      const std::string& x_label, const std::string& y_label);

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars,
                     double y_max = 1.0);

}  // namespace roboaug
