#include "lacon/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "lacon/scorers.hpp"

namespace lacon {
namespace {

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream};
  return std::mt19937_64(seq);
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable blur with edge clamping.
void blur(std::vector<double>& img, int side, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(img.size());
  auto idx = [side](int x, int y) { return static_cast<std::size_t>(y) * side + x; };
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<std::size_t>(i + radius)] * img[idx(std::clamp(x + i, 0, side - 1), y)];
      tmp[idx(x, y)] = acc;
    }
  }
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[idx(x, std::clamp(y + i, 0, side - 1))];
      img[idx(x, y)] = acc;
    }
  }
}

}  // namespace

SynthParams draw_synth_params(std::uint64_t seed, std::uint64_t index) {
  auto rng = sample_rng(seed, index, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](std::initializer_list<double> options) {
    const auto i = static_cast<std::size_t>(unit(rng) * static_cast<double>(options.size()));
    return *(options.begin() + std::min(i, options.size() - 1));
  };

  SynthParams p;
  p.class_label = unit(rng) < 0.5 ? 0 : 1;
  p.period = static_cast<int>(pick({4.0, 6.0, 8.0}));
  p.phase = 2.0 * std::numbers::pi * unit(rng);
  p.contrast = 0.05 + 0.35 * unit(rng);
  p.brightness = 0.05 + 0.9 * unit(rng);
  const double u = unit(rng);
  p.noise_amp = 0.15 * u * u;
  p.blur_sigma = pick({0.0, 0.0, 0.6, 1.0, 1.5});
  p.tones = static_cast<int>(std::lround(std::exp2(1.0 + 7.0 * unit(rng))));
  p.tagged = unit(rng) < 0.35;
  p.tag_opacity = p.tagged ? 0.4 + 0.6 * unit(rng) : 0.0;
  p.tint = 0.1 * unit(rng);
  p.tint_channel = static_cast<int>(pick({0.0, 1.0, 2.0}));
  p.noise_seed = rng();
  return p;
}

RgbImage render_synthetic(const SynthParams& p, int side) {
  if (side < kCornerTagSize) throw std::invalid_argument("synthetic image side too small");
  if (p.tones < 2 || p.tones > 256) throw std::invalid_argument("tone count must be in [2, 256]");
  if (p.period < 1) throw std::invalid_argument("stripe period must be positive");

  std::mt19937_64 noise_rng(p.noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(side) * side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int along = p.class_label == 0 ? y : x;
      const double stripe = std::sin(2.0 * std::numbers::pi * along / p.period + p.phase);
      v[static_cast<std::size_t>(y) * side + x] = p.brightness + p.contrast * stripe + p.noise_amp * normal(noise_rng);
    }
  }
  if (p.blur_sigma > 0.0) blur(v, side, p.blur_sigma);

  const double levels = p.tones - 1;
  for (double& x : v) x = std::round(std::clamp(x, 0.0, 1.0) * levels) / levels;

  if (p.tagged) {
    for (int y = 0; y < kCornerTagSize; ++y) {
      for (int x = 0; x < kCornerTagSize; ++x) {
        double& px = v[static_cast<std::size_t>(y) * side + x];
        px = (1.0 - p.tag_opacity) * px + p.tag_opacity * corner_tag_value(x, y);
      }
    }
  }

  std::vector<Rgb> rgb;
  rgb.reserve(v.size());
  const double dim = 1.0 - p.tint;
  for (double x : v) {
    const double c = std::clamp(x, 0.0, 1.0);
    Rgb px{c * dim, c * dim, c * dim};
    if (p.tint_channel == 0) px.r = c;
    else if (p.tint_channel == 1) px.g = c;
    else px.b = c;
    rgb.push_back(px);
  }
  return RgbImage(side, side, std::move(rgb));
}

SyntheticSample synthesize_one(std::uint64_t seed, std::uint64_t index) {
  SynthParams p = draw_synth_params(seed, index);
  return {render_synthetic(p), p.class_label, p};
}

std::vector<SyntheticSample> make_synthetic_corpus(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  std::vector<SyntheticSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synthesize_one(seed, i));
  return out;
}

std::string synth_ref(std::uint64_t seed, std::uint64_t index) {
  return "synth:" + std::to_string(seed) + ":" + std::to_string(index);
}

std::optional<SynthRef> parse_synth_ref(std::string_view ref) {
  constexpr std::string_view prefix = "synth:";
  if (!ref.starts_with(prefix)) return std::nullopt;
  ref.remove_prefix(prefix.size());
  const auto colon = ref.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  SynthRef out{};
  const std::string_view a = ref.substr(0, colon);
  const std::string_view b = ref.substr(colon + 1);
  auto ra = std::from_chars(a.data(), a.data() + a.size(), out.seed);
  auto rb = std::from_chars(b.data(), b.data() + b.size(), out.index);
  if (ra.ec != std::errc{} || ra.ptr != a.data() + a.size() || rb.ec != std::errc{} ||
      rb.ptr != b.data() + b.size() || a.empty() || b.empty()) {
    return std::nullopt;
  }
  return out;
}

}  // namespace lacon
