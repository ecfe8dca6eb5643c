#pragma once

#include <filesystem>

#include "lacon/image.hpp"

namespace lacon {

// Decodes any libpng-readable PNG (gray, palette, RGB, with or without alpha,
// 8 or 16 bit) into [0,1] RGB. Alpha is discarded. Throws std::runtime_error
// with the decoder's reason on failure.
RgbImage read_png(const std::filesystem::path& path);

// Writes 8-bit RGB, rounding each channel to the nearest level.
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace lacon
