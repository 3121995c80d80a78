#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace selfcal {

inline constexpr int kMaxChannels = 3;

/**
 * Dense row-major image with interleaved channels, stored in double precision.
 *
 * Pixel (x, y) has its center at continuous coordinate (x, y): the top-left
 * pixel center is (0, 0). Every module that maps between pixels and rays
 * follows this convention.
 */
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  double &at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const Image &other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  friend bool operator==(const Image &, const Image &) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Per-pixel scene depth; every value is finite and strictly positive.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill);
  DepthMap(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double &at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const { return data_; }

  /// Throws DomainError naming the first non-finite or non-positive pixel.
  void validate() const;

  friend bool operator==(const DepthMap &, const DepthMap &) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Result of a bilinear lookup. Channels beyond the image's count stay zero.
struct PixelSample {
  std::array<double, kMaxChannels> color{};
  std::array<double, kMaxChannels> d_du{};
  std::array<double, kMaxChannels> d_dv{};
  bool valid = false;
};

/**
 * Bilinear lookup at continuous pixel coordinates with exact derivatives of
 * the blend. Valid iff 0 <= u <= W-1 and 0 <= v <= H-1; the last row/column
 * is handled by clamping the cell, not by zero padding.
 */
PixelSample sample_bilinear(const Image &img, double u, double v);

/// Halves each dimension (ceiling); every output pixel is the mean of its 2x2 block.
Image downsample(const Image &img);

/// Level 0 is the input; level l has dimensions ceil(W/2^l) x ceil(H/2^l).
using Pyramid = std::vector<Image>;

Pyramid build_pyramid(const Image &img, int levels);

/// Decodes binary PPM (P6) or PGM (P5) with maxval 255.
Image load_image(std::span<const std::uint8_t> bytes);
/// Encodes P6 for 3 channels, P5 for 1. Values are clamped to [0,1] and rounded.
std::vector<std::uint8_t> save_image(const Image &img);

/// Grayscale little-endian PFM ("Pf", scale -1.0), rows stored bottom to top.
std::vector<std::uint8_t> save_depth_pfm(const DepthMap &depth);
DepthMap load_depth_pfm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

}  // namespace selfcal
