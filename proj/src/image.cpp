// SPDX-License-Identifier: Apache-2.0
#include "roboaug/image.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace roboaug {
namespace {

struct PnmHeader {
  int magic = 0;  // 5 or 6
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes) {
  PnmHeader h;
  std::size_t i = 0;
  auto peek = [&]() -> int {
    return i < bytes.size() ? bytes[i] : -1;
  };
  auto skip_ws = [&]() {
    while (i < bytes.size()) {
      if (std::isspace(peek())) {
        ++i;
      } else if (peek() == '#') {
        while (i < bytes.size() && bytes[i] != '\n') ++i;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> int {
    skip_ws();
    if (i >= bytes.size() || !std::isdigit(peek()))
      fail(ErrorCode::CodecError, "pnm: expected integer in header");
    long v = 0;
    while (i < bytes.size() && std::isdigit(peek())) {
      v = v * 10 + (bytes[i] - '0');
      if (v > 1 << 30) fail(ErrorCode::CodecError, "pnm: header value overflow");
      ++i;
    }
    return static_cast<int>(v);
  };

  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '5' && bytes[1] != '6'))
    fail(ErrorCode::CodecError, "pnm: bad magic");
  h.magic = bytes[1] - '0';
  i = 2;
  h.width = read_int();
  h.height = read_int();
  h.maxval = read_int();
  if (h.width <= 0 || h.height <= 0)
    fail(ErrorCode::CodecError, "pnm: nonpositive dimensions");
  if (h.maxval != 255)
    fail(ErrorCode::CodecError, "pnm: only maxval 255 supported");
  // Exactly one whitespace byte separates header from raster.
  if (i >= bytes.size() || !std::isspace(bytes[i]))
    fail(ErrorCode::CodecError, "pnm: missing raster separator");
  h.data_offset = i + 1;
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  char header[64];
  int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width,
                        img.height);
  std::vector<std::uint8_t> out(header, header + n);
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  PnmHeader h = parse_pnm_header(bytes);
  if (h.magic != 6) fail(ErrorCode::CodecError, "ppm: expected P6");
  std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
  if (bytes.size() - h.data_offset < need)
    fail(ErrorCode::CodecError, "ppm: truncated raster");
  Image img(h.height, h.width);
  std::memcpy(img.data.data(), bytes.data() + h.data_offset, need);
  return img;
}

std::vector<std::uint8_t> encode_mask(const Mask& mask) {
  for (auto v : mask.data)
    if (v > 1)
      fail(ErrorCode::InvalidMaskValue,
           "encode_mask: mask value " + std::to_string(v) + " outside {0,1}");
  char header[64];
  int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", mask.width,
                        mask.height);
  std::vector<std::uint8_t> out(header, header + n);
  out.reserve(out.size() + mask.data.size());
  for (auto v : mask.data) out.push_back(v ? 255 : 0);
  return out;
}

Mask decode_mask(const std::vector<std::uint8_t>& bytes) {
  PnmHeader h = parse_pnm_header(bytes);
  if (h.magic != 5) fail(ErrorCode::CodecError, "mask: expected P5");
  std::size_t need = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < need)
    fail(ErrorCode::CodecError, "mask: truncated raster");
  Mask m(h.height, h.width);
  for (std::size_t i = 0; i < need; ++i)
    m.data[i] = bytes[h.data_offset + i] >= 128 ? 1 : 0;
  return m;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::MissingFile, "short write: " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) fail(ErrorCode::MissingFile, "cannot open: " + path);
  auto size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()),
         static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::MissingFile, "short read: " + path);
  return bytes;
}

Box tight_bbox(const Mask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        if (x < x0) x0 = x;
        if (x > x1) x1 = x;
        if (y < y0) y0 = y;
        if (y > y1) y1 = y;
      }
  if (x1 < 0) fail(ErrorCode::DegenerateBox, "tight_bbox: empty mask");
  return Box{static_cast<double>(x0), static_cast<double>(y0),
             static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)};
}

}  // namespace roboaug
