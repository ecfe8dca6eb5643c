#include "lacon/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lacon {
namespace {

bool unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < kMinSide || height < kMinSide) {
    throw std::invalid_argument("image too small: " + std::to_string(width) + "x" +
                                std::to_string(height) + " (both sides must be >= 3)");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("gray image data length does not match width*height");
  }
  if (!std::all_of(data_.begin(), data_.end(), unit_interval)) {
    throw std::invalid_argument("gray image intensity outside [0,1]");
  }
}

GrayImage GrayImage::filled(int width, int height, double value) {
  return GrayImage(width, height,
                   std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), value));
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) throw std::invalid_argument("rgb image must be non-empty");
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("rgb image data length does not match width*height");
  }
  for (const Rgb& p : data_) {
    if (!unit_interval(p.r) || !unit_interval(p.g) || !unit_interval(p.b)) {
      throw std::invalid_argument("rgb image channel outside [0,1]");
    }
  }
}

RgbImage RgbImage::filled(int width, int height, Rgb value) {
  return RgbImage(width, height,
                  std::vector<Rgb>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), value));
}

GrayImage to_gray(const RgbImage& rgb) {
  std::vector<double> out;
  out.reserve(rgb.size());
  for (const Rgb& p : rgb.pixels()) {
    out.push_back(std::clamp(0.299 * p.r + 0.587 * p.g + 0.114 * p.b, 0.0, 1.0));
  }
  return GrayImage(rgb.width(), rgb.height(), std::move(out));
}

RgbImage gray_to_rgb(int width, int height, std::span<const double> intensities) {
  std::vector<Rgb> out;
  out.reserve(intensities.size());
  for (double v : intensities) out.push_back({v, v, v});
  return RgbImage(width, height, std::move(out));
}

}  // namespace lacon
