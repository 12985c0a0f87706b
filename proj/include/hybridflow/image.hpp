#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

namespace hf {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// RGB raster, channel values in [0,1], interleaved r,g,b per pixel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, float fill = 0.f)
      : width_(width), height_(height),
        data_(static_cast<size_t>(width) * height * 3, fill) {
    if (width < 1 || height < 1)
      throw ContractError("Image: dimensions must be >= 1");
  }

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int x, int y, int c) {
    return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
  }
  float at(int x, int y, int c) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
  }

  // Mirror-padded access for any integer coordinate.
  float at_mirror(int x, int y, int c) const {
    x = mirror_index(x, width_);
    y = mirror_index(y, height_);
    return at(x, y, c);
  }

  float gray(int x, int y) const {
    return (at(x, y, 0) + at(x, y, 1) + at(x, y, 2)) / 3.f;
  }
  float gray_mirror(int x, int y) const {
    x = mirror_index(x, width_);
    y = mirror_index(y, height_);
    return gray(x, y);
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  static int mirror_index(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * n - 2;
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// 16-bit raster used for the KITTI flow interchange format.
struct Raster16 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint16_t> data;  // interleaved

  uint16_t& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint16_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

namespace detail {

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

// Decodes a PNG into 16-bit RGB rows regardless of source depth/layout.
inline Raster16 read_png_raster(const std::string& path, int* bit_depth_out) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, ctx.fp) != 8 || png_sig_cmp(header, 0, 8))
    throw FormatError("not a PNG file: " + path);

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw FormatError("PNG decode failed: " + path);

  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  int depth = png_get_bit_depth(ctx.png, ctx.info);
  int color = png_get_color_type(ctx.png, ctx.info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(ctx.png);
  png_set_strip_alpha(ctx.png);
  if (depth == 16) png_set_swap(ctx.png);  // libpng delivers big-endian 16-bit
  png_read_update_info(ctx.png, ctx.info);

  int out_depth = png_get_bit_depth(ctx.png, ctx.info);
  if (bit_depth_out) *bit_depth_out = out_depth;

  Raster16 out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = 3;
  out.data.resize(static_cast<size_t>(w) * h * 3);

  if (out_depth == 16) {
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
      rows[y] = reinterpret_cast<png_bytep>(&out.data[static_cast<size_t>(y) * w * 3]);
    png_read_image(ctx.png, rows.data());
  } else {
    std::vector<uint8_t> buf(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
      rows[y] = &buf[static_cast<size_t>(y) * w * 3];
    png_read_image(ctx.png, rows.data());
    for (size_t i = 0; i < buf.size(); ++i) out.data[i] = buf[i];
  }
  png_read_end(ctx.png, nullptr);
  return out;
}

inline void write_png_raster(const std::string& path, const Raster16& r, int bit_depth) {
  PngWriteCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw IoError("cannot open for write: " + path);
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG encode failed: " + path);

  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, r.width, r.height, bit_depth, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  if (bit_depth == 16) {
    png_set_swap(ctx.png);
    std::vector<png_bytep> rows(r.height);
    for (int y = 0; y < r.height; ++y)
      rows[y] = reinterpret_cast<png_bytep>(
          const_cast<uint16_t*>(&r.data[static_cast<size_t>(y) * r.width * 3]));
    png_write_image(ctx.png, rows.data());
  } else {
    std::vector<uint8_t> buf(static_cast<size_t>(r.width) * r.height * 3);
    for (size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<uint8_t>(std::min<uint16_t>(r.data[i], 255));
    std::vector<png_bytep> rows(r.height);
    for (int y = 0; y < r.height; ++y)
      rows[y] = &buf[static_cast<size_t>(y) * r.width * 3];
    png_write_image(ctx.png, rows.data());
  }
  png_write_end(ctx.png, nullptr);
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         std::equal(suf.rbegin(), suf.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6" && magic != "P5") throw FormatError("unsupported PNM magic in " + path);
  auto next_int = [&in]() {
    int v;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') { std::string line; std::getline(in, line); continue; }
      break;
    }
    if (!(in >> v)) throw FormatError("bad PNM header");
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  in.get();  // single whitespace after maxval
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw FormatError("bad PNM header");
  int ch = (magic == "P6") ? 3 : 1;
  int bytes = maxval > 255 ? 2 : 1;
  std::vector<uint8_t> buf(static_cast<size_t>(w) * h * ch * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw FormatError("truncated PNM payload in " + path);

  Image img(w, h);
  float scale = 1.f / static_cast<float>(maxval);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        size_t idx = (static_cast<size_t>(y) * w + x) * ch + (ch == 3 ? c : 0);
        int v = bytes == 1 ? buf[idx] : (buf[idx * 2] << 8) | buf[idx * 2 + 1];
        img.at(x, y, c) = static_cast<float>(v) * scale;
      }
  return img;
}

inline void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width()) * 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        float v = std::clamp(img.at(x, y, c), 0.f, 1.f);
        row[static_cast<size_t>(x) * 3 + c] =
            static_cast<uint8_t>(std::lround(v * 255.f));
      }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

inline Image read_image(const std::string& path) {
  if (detail::ends_with(path, ".ppm") || detail::ends_with(path, ".pgm"))
    return detail::read_ppm(path);
  int depth = 8;
  Raster16 r = detail::read_png_raster(path, &depth);
  Image img(r.width, r.height);
  float scale = depth == 16 ? 1.f / 65535.f : 1.f / 255.f;
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<float>(r.at(x, y, c)) * scale;
  return img;
}

inline void write_image(const std::string& path, const Image& img) {
  if (detail::ends_with(path, ".ppm")) {
    detail::write_ppm(path, img);
    return;
  }
  Raster16 r;
  r.width = img.width();
  r.height = img.height();
  r.channels = 3;
  r.data.resize(static_cast<size_t>(r.width) * r.height * 3);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = std::clamp(img.at(x, y, c), 0.f, 1.f);
        r.at(x, y, c) = static_cast<uint16_t>(std::lround(v * 255.f));
      }
  detail::write_png_raster(path, r, 8);
}

}  // namespace hf
