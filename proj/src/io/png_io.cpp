#include "mvgaze/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "mvgaze/error.hpp"

namespace mvgaze::io {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw Error(ErrorKind::ShapeMismatch, "png writer supports gray or RGB only");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "libpng failure writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(size_t(img.height));
  for (int v = 0; v < img.height; ++v)
    rows[size_t(v)] = const_cast<png_bytep>(&img.pixels[size_t(v) * img.width * img.channels]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png_1bit(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& bits) {
  if (bits.size() != size_t(width) * size_t(height))
    throw Error(ErrorKind::ShapeMismatch, "1-bit png value count mismatch");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "libpng failure writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const int stride = (width + 7) / 8;
  std::vector<uint8_t> packed(size_t(stride) * size_t(height), 0);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u)
      if (bits[size_t(v) * width + u])
        packed[size_t(v) * stride + u / 8] |= uint8_t(0x80 >> (u % 8));
  std::vector<png_bytep> rows(size_t(height));
  for (int v = 0; v < height; ++v) rows[size_t(v)] = &packed[size_t(v) * stride];
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::ParseError, "libpng failure reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);           // palette/1-bit/tRNS -> 8-bit
  png_set_strip_16(png);         // 16-bit -> 8-bit
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image8 img;
  img.width = int(png_get_image_width(png, info));
  img.height = int(png_get_image_height(png, info));
  const png_byte color = png_get_color_type(png, info);
  img.channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
  img.pixels.resize(size_t(img.width) * img.height * img.channels);

  std::vector<png_bytep> rows(size_t(img.height));
  for (int v = 0; v < img.height; ++v)
    rows[size_t(v)] = &img.pixels[size_t(v) * img.width * img.channels];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace mvgaze::io
