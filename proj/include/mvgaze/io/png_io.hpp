#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mvgaze::io {

/// 8-bit image, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, int c) : width(w), height(h), channels(c), pixels(size_t(w) * h * c, 0) {}

  uint8_t& at(int u, int v, int c) { return pixels[(size_t(v) * width + u) * channels + c]; }
  uint8_t at(int u, int v, int c) const { return pixels[(size_t(v) * width + u) * channels + c]; }
};

void write_png(const std::string& path, const Image8& img);

/// Bit-packed 1-bit grayscale, for binary masks.
void write_png_1bit(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& bits);

/// Reads any PNG as 8-bit gray or RGB (palette/alpha are expanded/stripped).
Image8 read_png(const std::string& path);

}  // namespace mvgaze::io
