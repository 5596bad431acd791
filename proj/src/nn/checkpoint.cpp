#include "mvgaze/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace mvgaze::nn {

namespace {

constexpr uint32_t kVersion = 1;

void put_u16(std::ostream& os, uint16_t x) {
  const unsigned char b[2] = {static_cast<unsigned char>(x & 0xff),
                              static_cast<unsigned char>((x >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                              static_cast<unsigned char>((x >> 8) & 0xff),
                              static_cast<unsigned char>((x >> 16) & 0xff),
                              static_cast<unsigned char>((x >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0]) | uint16_t(uint16_t(b[1]) << 8);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

}  // namespace

void save_checkpoint(ToyModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  os.write("MVGZ", 4);
  put_u32(os, kVersion);
  model.visit_params([&os](const std::string& name, Tensor& t) {
    put_u16(os, uint16_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    put_u32(os, uint32_t(t.shape.size()));
    for (int d : t.shape) put_u32(os, uint32_t(d));
    std::vector<float> raw(t.v.begin(), t.v.end());
    os.write(reinterpret_cast<const char*>(raw.data()),
             std::streamsize(raw.size() * sizeof(float)));
  });
  if (!os) throw Error(ErrorKind::IoError, "short write to " + path);
}

void load_checkpoint(ToyModel& model, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MVGZ", 4) != 0)
    throw Error(ErrorKind::ParseError, "bad MVGZ magic in " + path);
  const uint32_t version = get_u32(is);
  if (version != kVersion)
    throw Error(ErrorKind::ParseError, "unsupported checkpoint version in " + path);

  std::map<std::string, std::pair<std::vector<int>, std::vector<double>>> loaded;
  while (true) {
    const uint16_t name_len = get_u16(is);
    if (!is) break;  // clean EOF
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t rank = get_u32(is);
    if (rank > 8) throw Error(ErrorKind::ParseError, "implausible tensor rank in " + path);
    std::vector<int> shape(rank);
    int64_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = int(get_u32(is));
      n *= shape[i];
    }
    std::vector<float> raw(size_t(n));
    is.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(float)));
    if (!is) throw Error(ErrorKind::ParseError, "truncated tensor payload in " + path);
    loaded[name] = {std::move(shape), std::vector<double>(raw.begin(), raw.end())};
  }

  model.visit_params([&](const std::string& name, Tensor& t) {
    auto it = loaded.find(name);
    if (it == loaded.end())
      throw Error(ErrorKind::ParseError, "checkpoint is missing tensor " + name);
    if (it->second.first != t.shape)
      throw Error(ErrorKind::ShapeMismatch, "checkpoint shape mismatch for " + name);
    t.v = it->second.second;
  });
}

}  // namespace mvgaze::nn
