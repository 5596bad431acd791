#include "mvgaze/io/dpth.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace mvgaze::io {

namespace {

void put_u32(std::ostream& os, uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                              static_cast<unsigned char>((x >> 8) & 0xff),
                              static_cast<unsigned char>((x >> 16) & 0xff),
                              static_cast<unsigned char>((x >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void read_payload(const std::string& path, int& width, int& height, std::vector<double>& values) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DPTH", 4) != 0)
    throw Error(ErrorKind::ParseError, "bad DPTH magic in " + path);
  width = int(get_u32(is));
  height = int(get_u32(is));
  if (width <= 0 || height <= 0 || int64_t(width) * height > (int64_t(1) << 30))
    throw Error(ErrorKind::ParseError, "implausible DPTH dimensions in " + path);
  const size_t n = size_t(width) * size_t(height);
  std::vector<float> raw(n);
  is.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n * sizeof(float)));
  if (!is) throw Error(ErrorKind::ParseError, "truncated DPTH payload in " + path);
  values.assign(raw.begin(), raw.end());
}

}  // namespace

void write_dpth(const std::string& path, int width, int height,
                const std::vector<double>& values) {
  if (size_t(width) * size_t(height) != values.size())
    throw Error(ErrorKind::ShapeMismatch, "DPTH value count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  os.write("DPTH", 4);
  put_u32(os, uint32_t(width));
  put_u32(os, uint32_t(height));
  std::vector<float> raw(values.begin(), values.end());
  os.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * sizeof(float)));
  if (!os) throw Error(ErrorKind::IoError, "short write to " + path);
}

DepthMap read_depth(const std::string& path) {
  DepthMap d;
  read_payload(path, d.width, d.height, d.values);
  d.validate_positive();
  return d;
}

FovHeatmap read_heatmap_dpth(const std::string& path) {
  FovHeatmap h;
  read_payload(path, h.width, h.height, h.values);
  return h;
}

}  // namespace mvgaze::io
