#include "lacon/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lacon {

RgbImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  const std::string name = path.string();
  if (!png_image_begin_read_from_file(&image, name.c_str())) {
    throw std::runtime_error("cannot decode PNG '" + name + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string reason = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG '" + name + "': " + reason);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<Rgb> pixels(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {buffer[3 * i] / 255.0, buffer[3 * i + 1] / 255.0, buffer[3 * i + 2] / 255.0};
  }
  return RgbImage(w, h, std::move(pixels));
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::vector<std::uint8_t> buffer;
  buffer.reserve(img.size() * 3);
  auto level = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  for (const Rgb& p : img.pixels()) {
    buffer.push_back(level(p.r));
    buffer.push_back(level(p.g));
    buffer.push_back(level(p.b));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  const std::string name = path.string();
  if (!png_image_write_to_file(&image, name.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG '" + name + "': " + image.message);
  }
}

}  // namespace lacon
