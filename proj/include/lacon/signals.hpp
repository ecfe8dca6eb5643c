#pragma once

#include <string_view>

#include "lacon/image.hpp"
#include "lacon/quality.hpp"
#include "lacon/scorers.hpp"

namespace lacon {

inline constexpr int kDefaultNormalizedLongSide = 512;

// Multiplier taking a unit-intensity Laplacian variance to 8-bit intensity²
// units, the scale the clarity anchors are expressed in.
inline constexpr double kClarityScale = 255.0 * 255.0;

// Bilinear resize so the longer side equals `target_long_side`. The short side
// is rounded half-up. Images already at the target are returned unchanged.
// Throws std::invalid_argument("image too small") if a side drops below 3.
GrayImage scale_normalize(const GrayImage& img, int target_long_side = kDefaultNormalizedLongSide);

// Population variance of the 3x3 Laplacian response over interior pixels,
// in unit-intensity² units.
double clarity(const GrayImage& img);

// Shannon entropy (bits) of the 256-bin intensity histogram.
double entropy(const GrayImage& img);

// Mean of the HSV value channel, max(r, g, b).
double luminance(const RgbImage& img);

struct LabelConfig {
  int target_long_side = kDefaultNormalizedLongSide;
  ScorerHandle aes_scorer;
  ScorerHandle wat_scorer;
};

// Full per-image labeling: grayscale, scale normalization, the three analytic
// signals and the two scorer calls. Throws std::invalid_argument naming the
// scorer if it returns a value outside its declared range.
QualityVector label_sample(const RgbImage& rgb, const Scorer& aes_scorer, const Scorer& wat_scorer,
                           int target_long_side = kDefaultNormalizedLongSide,
                           std::string_view sample_id = {});

QualityVector label_sample(const RgbImage& rgb, const LabelConfig& config, std::string_view sample_id = {});

}  // namespace lacon
