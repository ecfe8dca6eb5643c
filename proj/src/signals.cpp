#include "lacon/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lacon {
namespace {

// Source sampling positions for one axis: for each output index the two
// neighbouring source indices and the weight of the upper one.
struct AxisTap {
  int lo;
  int hi;
  double frac;
};

std::vector<AxisTap> axis_taps(int in_size, int out_size) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out_size));
  const double ratio = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double src = (i + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_size - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
  }
  return taps;
}

void check_scorer_range(const Scorer& scorer, double value, ValueRange range) {
  if (!std::isfinite(value) || !range.contains(value)) {
    throw ScorerError("scorer '" + std::string(scorer.name()) + "' returned " +
                                std::to_string(value) + ", outside [" + std::to_string(range.lo) +
                                ", " + std::to_string(range.hi) + "]");
  }
}

}  // namespace

GrayImage scale_normalize(const GrayImage& img, int target_long_side) {
  if (target_long_side < GrayImage::kMinSide) {
    throw std::invalid_argument("target_long_side must be >= 3");
  }
  const int w = img.width();
  const int h = img.height();
  const int long_side = std::max(w, h);
  if (long_side == target_long_side) return img;

  const int short_side = std::min(w, h);
  const int scaled_short =
      static_cast<int>(std::floor(static_cast<double>(short_side) * target_long_side / long_side + 0.5));
  const int out_w = w >= h ? target_long_side : scaled_short;
  const int out_h = w >= h ? scaled_short : target_long_side;
  if (out_w < GrayImage::kMinSide || out_h < GrayImage::kMinSide) {
    throw std::invalid_argument("image too small");
  }

  const auto xs = axis_taps(w, out_w);
  const auto ys = axis_taps(h, out_h);
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
  for (int y = 0; y < out_h; ++y) {
    const AxisTap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const AxisTap& tx = xs[static_cast<std::size_t>(x)];
      const double top = img(tx.lo, ty.lo) * (1.0 - tx.frac) + img(tx.hi, ty.lo) * tx.frac;
      const double bottom = img(tx.lo, ty.hi) * (1.0 - tx.frac) + img(tx.hi, ty.hi) * tx.frac;
      out[static_cast<std::size_t>(y) * out_w + x] = std::clamp(top * (1.0 - ty.frac) + bottom * ty.frac, 0.0, 1.0);
    }
  }
  return GrayImage(out_w, out_h, std::move(out));
}

double clarity(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<double> response;
  response.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      response.push_back(img(x, y - 1) + img(x - 1, y) + img(x + 1, y) + img(x, y + 1) - 4.0 * img(x, y));
    }
  }
  double mean = 0.0;
  for (double r : response) mean += r;
  mean /= static_cast<double>(response.size());
  double var = 0.0;
  for (double r : response) var += (r - mean) * (r - mean);
  return var / static_cast<double>(response.size());
}

double entropy(const GrayImage& img) {
  std::array<std::size_t, 256> counts{};
  for (double v : img.pixels()) {
    counts[static_cast<std::size_t>(std::floor(v * 255.999))]++;
  }
  const double n = static_cast<double>(img.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::clamp(h, 0.0, 8.0);
}

double luminance(const RgbImage& img) {
  double sum = 0.0;
  for (const Rgb& p : img.pixels()) sum += std::max({p.r, p.g, p.b});
  return sum / static_cast<double>(img.size());
}

QualityVector label_sample(const RgbImage& rgb, const Scorer& aes_scorer, const Scorer& wat_scorer,
                           int target_long_side, std::string_view sample_id) {
  const GrayImage gray = to_gray(rgb);
  const GrayImage normalized = scale_normalize(gray, target_long_side);

  QualityVector q;
  q.s_aes = aes_scorer.score(rgb, sample_id);
  check_scorer_range(aes_scorer, q.s_aes, declared_range(Attribute::aes));
  q.s_wat = wat_scorer.score(rgb, sample_id);
  check_scorer_range(wat_scorer, q.s_wat, declared_range(Attribute::wat));
  q.s_cla = clarity(normalized) * kClarityScale;
  q.s_ent = entropy(gray);
  q.s_luma = luminance(rgb);
  return q;
}

QualityVector label_sample(const RgbImage& rgb, const LabelConfig& config, std::string_view sample_id) {
  if (!config.aes_scorer || !config.wat_scorer) {
    throw std::invalid_argument("label config is missing a scorer");
  }
  return label_sample(rgb, *config.aes_scorer, *config.wat_scorer, config.target_long_side, sample_id);
}

}  // namespace lacon
