#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace hforge {

/// Interleaved 8-bit image with a fixed channel count. Pixel (x, y) is the
/// sample whose center sits at integer coordinates (x, y).
template <int Channels>
struct Image8 {
  static constexpr int kChannels = Channels;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * Channels, fill) {}

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * Channels;
  }
  std::uint8_t* at(int x, int y) { return data.data() + offset(x, y); }
  const std::uint8_t* at(int x, int y) const { return data.data() + offset(x, y); }

  bool operator==(const Image8&) const = default;
};

using RgbImage = Image8<3>;
using RgbaImage = Image8<4>;
using GrayImage = Image8<1>;

/// Per-pixel integer labels (segmentation class ids, palette indices).
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;

  LabelImage() = default;
  LabelImage(int w, int h, std::uint16_t fill = 0)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint16_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const LabelImage&) const = default;
};

RgbImage read_png_rgb(const std::filesystem::path& path);
RgbaImage read_png_rgba(const std::filesystem::path& path);

/// Reads a class-id mask: palette PNGs yield palette indices, gray PNGs
/// (8 or 16 bit) yield raw sample values.
LabelImage read_png_labels(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbaImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// 16-bit grayscale when any label exceeds 255, 8-bit otherwise.
void write_png(const std::filesystem::path& path, const LabelImage& labels);

/// Indexed PNG using the given palette (index -> RGB); labels must be < 256.
void write_png_indexed(const std::filesystem::path& path, const LabelImage& labels,
                       const std::vector<std::array<std::uint8_t, 3>>& palette);

}  // namespace hforge
