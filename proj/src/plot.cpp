// SPDX-License-Identifier: Apache-2.0
#include "roboaug/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace roboaug {
namespace {

// 5x7 font, one byte per row, low 5 bits used.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

const Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
};

const Glyph* find_glyph(char c) {
  c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont)
    if (g.ch == c) return &g;
  return nullptr;
}

std::string format_tick(double v) {
  char buf[32];
  if (std::abs(v) >= 100 || v == std::floor(v))
    std::snprintf(buf, sizeof(buf), "%g", v);
  else
    std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

Canvas::Canvas(int height, int width, std::uint8_t bg) : img_(height, width, bg) {}

void Canvas::fill_rect(int y0, int x0, int y1, int x1, std::uint8_t r,
                       std::uint8_t g, std::uint8_t b) {
  y0 = std::clamp(y0, 0, img_.height);
  y1 = std::clamp(y1, 0, img_.height);
  x0 = std::clamp(x0, 0, img_.width);
  x1 = std::clamp(x1, 0, img_.width);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      img_.at(y, x, 0) = r;
      img_.at(y, x, 1) = g;
      img_.at(y, x, 2) = b;
    }
}

void Canvas::line(int y0, int x0, int y1, int x1, std::uint8_t r,
                  std::uint8_t g, std::uint8_t b) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (y0 >= 0 && y0 < img_.height && x0 >= 0 && x0 < img_.width) {
      img_.at(y0, x0, 0) = r;
      img_.at(y0, x0, 1) = g;
      img_.at(y0, x0, 2) = b;
    }
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

void Canvas::text(int y, int x, const std::string& s, std::uint8_t r,
                  std::uint8_t g, std::uint8_t b) {
  int cx = x;
  for (char c : s) {
    const Glyph* gl = find_glyph(c);
    if (gl) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (gl->rows[row] & (1 << (4 - col))) {
            int py = y + row, px = cx + col;
            if (py >= 0 && py < img_.height && px >= 0 && px < img_.width) {
              img_.at(py, px, 0) = r;
              img_.at(py, px, 1) = g;
              img_.at(py, px, 2) = b;
            }
          }
    }
    cx += 6;
  }
}

void Canvas::save(const std::string& path) const {
  write_file(path, encode_ppm(img_));
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series,
                      const std::string& x_label, const std::string& y_label) {
  const int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
  Canvas canvas(H, W);
  canvas.text(10, ML, title);
  canvas.text(H - 14, W / 2 - static_cast<int>(x_label.size()) * 3, x_label);
  canvas.text(MT - 16, 8, y_label);

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      x_min = std::min(x_min, s.xs[i]);
      x_max = std::max(x_max, s.xs[i]);
      y_min = std::min(y_min, s.ys[i]);
      y_max = std::max(y_max, s.ys[i]);
    }
  if (x_min > x_max) { x_min = 0; x_max = 1; }
  if (y_min > y_max) { y_min = 0; y_max = 1; }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  y_min = std::min(y_min, 0.0);

  auto px = [&](double x) {
    return ML + static_cast<int>((x - x_min) / (x_max - x_min) * (W - ML - MR));
  };
  auto py = [&](double y) {
    return H - MB - static_cast<int>((y - y_min) / (y_max - y_min) * (H - MT - MB));
  };

  canvas.line(py(y_min), ML, py(y_min), W - MR, 0, 0, 0);
  canvas.line(MT, ML, H - MB, ML, 0, 0, 0);
  for (int t = 0; t <= 4; ++t) {
    double yv = y_min + (y_max - y_min) * t / 4.0;
    canvas.line(py(yv), ML - 3, py(yv), ML, 0, 0, 0);
    canvas.text(py(yv) - 3, 8, format_tick(yv));
  }

  const std::uint8_t colors[][3] = {{200, 40, 40}, {40, 100, 200}, {40, 160, 60},
                                    {160, 100, 20}};
  int si = 0;
  for (const auto& s : series) {
    const auto* col = colors[si % 4];
    for (std::size_t i = 0; i + 1 < s.xs.size(); ++i)
      canvas.line(py(s.ys[i]), px(s.xs[i]), py(s.ys[i + 1]), px(s.xs[i + 1]),
                  col[0], col[1], col[2]);
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      canvas.fill_rect(py(s.ys[i]) - 2, px(s.xs[i]) - 2, py(s.ys[i]) + 3,
                       px(s.xs[i]) + 3, col[0], col[1], col[2]);
      canvas.text(H - MB + 8, px(s.xs[i]) - 6, format_tick(s.xs[i]));
    }
    canvas.text(MT + 12 * si, W - MR - 6 * static_cast<int>(s.label.size()),
                s.label, col[0], col[1], col[2]);
    ++si;
  }
  canvas.save(path);
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars,
                     double y_max) {
  const int W = std::max(360, 80 + static_cast<int>(bars.size()) * 70);
  const int H = 420, ML = 60, MT = 40, MB = 70;
  Canvas canvas(H, W);
  canvas.text(10, ML, title);
  if (y_max <= 0) y_max = 1.0;
  auto py = [&](double y) {
    return H - MB - static_cast<int>(y / y_max * (H - MT - MB));
  };
  canvas.line(H - MB, ML, H - MB, W - 20, 0, 0, 0);
  canvas.line(MT, ML, H - MB, ML, 0, 0, 0);
  for (int t = 0; t <= 4; ++t) {
    double yv = y_max * t / 4.0;
    canvas.text(py(yv) - 3, 8, format_tick(yv));
  }
  int x = ML + 20;
  for (const auto& [label, value] : bars) {
    canvas.fill_rect(py(std::clamp(value, 0.0, y_max)), x, H - MB, x + 40, 60,
                     110, 200);
    canvas.text(H - MB + 10, x, label.substr(0, 8));
    canvas.text(py(std::clamp(value, 0.0, y_max)) - 10, x, format_tick(value));
    x += 70;
  }
  canvas.save(path);
}

}  // namespace roboaug
