#include "hforge/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include <png.h>

#include "hforge/error.hpp"

namespace hforge {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

enum class Target { Rgb, Rgba, Labels };

// Decoded rows plus enough format info to interpret them.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::filesystem::path& path, Target target) {
  FilePtr file = open_file(path, "rb");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Io, "libpng initialisation failed");
  }
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Parse, path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (target == Target::Labels) {
    if (color == PNG_COLOR_TYPE_PALETTE) {
      if (depth < 8) png_set_packing(png);
    } else if (color == PNG_COLOR_TYPE_GRAY) {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (depth == 16) png_set_swap(png);  // little-endian samples in memory
    } else {
      message = "label masks must be palette or grayscale PNGs";
      png_longjmp(png, 1);
    }
  } else {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (target == Target::Rgb) {
      png_set_strip_alpha(png);
    } else {
      png_set_add_alpha(png, 0xff, PNG_FILLER_AFTER);
    }
  }
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
            const std::uint8_t* data, std::size_t stride,
            const std::vector<std::array<std::uint8_t, 3>>* palette = nullptr) {
  FilePtr file = open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "libpng initialisation failed");
  }
  std::vector<png_color> colors;
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) {
    for (const auto& c : *palette) colors.push_back(png_color{c[0], c[1], c[2]});
    png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
  }
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void check_dims(const std::filesystem::path& path, int w, int h) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "cannot write empty image " + path.string());
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
  Decoded d = decode(path, Target::Rgb);
  RgbImage img;
  img.width = d.width;
  img.height = d.height;
  img.data = std::move(d.bytes);
  return img;
}

RgbaImage read_png_rgba(const std::filesystem::path& path) {
  Decoded d = decode(path, Target::Rgba);
  RgbaImage img;
  img.width = d.width;
  img.height = d.height;
  img.data = std::move(d.bytes);
  return img;
}

LabelImage read_png_labels(const std::filesystem::path& path) {
  const Decoded d = decode(path, Target::Labels);
  LabelImage out(d.width, d.height);
  const std::size_t n = out.labels.size();
  if (d.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      out.labels[i] = static_cast<std::uint16_t>(d.bytes[2 * i] | (d.bytes[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = d.bytes[i];
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  check_dims(path, image.width, image.height);
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.data.data(),
         static_cast<std::size_t>(image.width) * 3);
}

void write_png(const std::filesystem::path& path, const RgbaImage& image) {
  check_dims(path, image.width, image.height);
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGBA, 8, image.data.data(),
         static_cast<std::size_t>(image.width) * 4);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  check_dims(path, image.width, image.height);
  encode(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 8, image.data.data(),
         static_cast<std::size_t>(image.width));
}

void write_png(const std::filesystem::path& path, const LabelImage& labels) {
  check_dims(path, labels.width, labels.height);
  bool wide = false;
  for (auto l : labels.labels) wide = wide || l > 255;
  if (wide) {
    std::vector<std::uint8_t> bytes(labels.labels.size() * 2);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
      bytes[2 * i] = static_cast<std::uint8_t>(labels.labels[i] & 0xff);
      bytes[2 * i + 1] = static_cast<std::uint8_t>(labels.labels[i] >> 8);
    }
    encode(path, labels.width, labels.height, PNG_COLOR_TYPE_GRAY, 16, bytes.data(),
           static_cast<std::size_t>(labels.width) * 2);
  } else {
    std::vector<std::uint8_t> bytes(labels.labels.begin(), labels.labels.end());
    encode(path, labels.width, labels.height, PNG_COLOR_TYPE_GRAY, 8, bytes.data(),
           static_cast<std::size_t>(labels.width));
  }
}

void write_png_indexed(const std::filesystem::path& path, const LabelImage& labels,
                       const std::vector<std::array<std::uint8_t, 3>>& palette) {
  check_dims(path, labels.width, labels.height);
  if (palette.empty() || palette.size() > 256) {
    throw Error(ErrorCode::InvalidArgument, "palette must hold 1..256 colors");
  }
  std::vector<std::uint8_t> bytes(labels.labels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (labels.labels[i] >= palette.size()) {
      throw Error(ErrorCode::InvalidArgument, "label outside palette in " + path.string());
    }
    bytes[i] = static_cast<std::uint8_t>(labels.labels[i]);
  }
  encode(path, labels.width, labels.height, PNG_COLOR_TYPE_PALETTE, 8, bytes.data(),
         static_cast<std::size_t>(labels.width), &palette);
}

}  // namespace hforge
