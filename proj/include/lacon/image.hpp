#pragma once

#include <span>
#include <vector>

namespace lacon {

// Row-major single-channel image with intensities in [0, 1].
// Both sides are at least 3 pixels so a 3x3 Laplacian has an interior.
class GrayImage {
 public:
  static constexpr int kMinSide = 3;

  GrayImage(int width, int height, std::vector<double> data);

  static GrayImage filled(int width, int height, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> pixels() const { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_;
  int height_;
  std::vector<double> data_;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  bool operator==(const Rgb&) const = default;
};

// Row-major RGB image, all channels in [0, 1].
class RgbImage {
 public:
  RgbImage(int width, int height, std::vector<Rgb> data);

  static RgbImage filled(int width, int height, Rgb value);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  const Rgb& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const Rgb> pixels() const { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  int width_;
  int height_;
  std::vector<Rgb> data_;
};

// ITU-R BT.601 luma weights.
GrayImage to_gray(const RgbImage& rgb);

// Replicates intensities into all three channels.
RgbImage gray_to_rgb(int width, int height, std::span<const double> intensities);

}  // namespace lacon
