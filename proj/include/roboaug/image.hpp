// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roboaug/common.hpp"

namespace roboaug {

// Interleaved RGB, 8 bits per channel.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // height * width * 3

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width;
  }
  bool operator==(const Image& o) const = default;
};

// Binary mask, values in {0, 1}.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // height * width

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool same_shape(const Mask& o) const {
    return height == o.height && width == o.width;
  }
  std::size_t area() const {
    std::size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }
  bool empty_mask() const { return area() == 0; }
  bool operator==(const Mask& o) const = default;
};

// Axis-aligned pixel box, [x_min, x_max) x [y_min, y_max).
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool operator==(const Box& o) const = default;
};

// --- PNM codecs -------------------------------------------------------------
// Frames are stored as binary PPM (P6), masks as binary PGM (P5) with
// foreground 255 / background 0. Both are lossless and inspectable with
// standard viewers.

std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(const std::vector<std::uint8_t>& bytes);

// Mask codec per the dataset contract: encode writes {0,255}; decode
// thresholds at 128 so near-binary inputs from external trackers survive.
std::vector<std::uint8_t> encode_mask(const Mask& mask);
Mask decode_mask(const std::vector<std::uint8_t>& bytes);

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

// Tight bounding box of the mask's foreground. Throws on empty masks.
Box tight_bbox(const Mask& mask);

}  // namespace roboaug
