#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lacon/image.hpp"

namespace lacon {

inline constexpr int kSyntheticSide = 16;
inline constexpr int kSyntheticClasses = 2;

// Generator knobs for one procedural image. Each knob mainly drives one
// quality signal: brightness -> luminance, blur -> clarity, tones -> entropy,
// tag -> watermark score.
struct SynthParams {
  int class_label = 0;       // 0: horizontal stripes, 1: vertical stripes
  int period = 8;            // stripe period in pixels
  double phase = 0.0;
  double contrast = 0.25;    // sine amplitude
  double brightness = 0.5;   // mean intensity before clamping
  double noise_amp = 0.0;    // std of per-pixel Gaussian texture
  double blur_sigma = 0.0;   // Gaussian blur, pixels; 0 disables
  int tones = 256;           // quantization levels, 2..256
  bool tagged = false;
  double tag_opacity = 0.0;
  double tint = 0.0;         // attenuation of the two non-dominant channels
  int tint_channel = 0;      // channel that keeps the full intensity
  std::uint64_t noise_seed = 0;
};

struct SyntheticSample {
  RgbImage image;
  int class_label;
  SynthParams params;
};

// Draws the knobs for sample `index` of a corpus seeded with `seed`.
SynthParams draw_synth_params(std::uint64_t seed, std::uint64_t index);

RgbImage render_synthetic(const SynthParams& params, int side = kSyntheticSide);

SyntheticSample synthesize_one(std::uint64_t seed, std::uint64_t index);

// n >= 1 samples; sample i depends only on (seed, i).
std::vector<SyntheticSample> make_synthetic_corpus(std::size_t n, std::uint64_t seed);

// "synth:<seed>:<index>" references let manifests point at regenerable images.
std::string synth_ref(std::uint64_t seed, std::uint64_t index);

struct SynthRef {
  std::uint64_t seed;
  std::uint64_t index;
};
std::optional<SynthRef> parse_synth_ref(std::string_view ref);

}  // namespace lacon
