#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

#include "lacon/image.hpp"

namespace lacon {

// A scorer failed or produced an out-of-range value. Distinct from image
// errors so the labeling pipeline can abort instead of skipping the sample.
class ScorerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model-based quality signal (aesthetic, watermark) behind a pluggable
// interface. Implementations must be deterministic.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string_view name() const = 0;
  virtual double score(const RgbImage& image, std::string_view sample_id) const = 0;

  // Scorers returning false are called under a lock by the labeling pipeline.
  virtual bool concurrent_safe() const { return true; }
};

using ScorerHandle = std::shared_ptr<const Scorer>;

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value, std::string name = "constant");
  std::string_view name() const override { return name_; }
  double score(const RgbImage&, std::string_view) const override { return value_; }

 private:
  double value_;
  std::string name_;
};

// Stand-in aesthetic predictor: rewards contrast, balanced exposure and low
// high-frequency noise. Output in [0, 10].
class HeuristicAestheticScorer final : public Scorer {
 public:
  std::string_view name() const override { return "heuristic"; }
  double score(const RgbImage& image, std::string_view sample_id) const override;
};

// Size of the square tag stamped into the top-left corner of watermarked
// synthetic images.
inline constexpr int kCornerTagSize = 4;

// Tag intensity at (x, y) inside the corner patch: a one-pixel checkerboard.
constexpr double corner_tag_value(int x, int y) { return ((x + y) % 2 == 0) ? 1.0 : 0.0; }

// Stand-in watermark detector: least-squares amplitude of the corner tag in
// the top-left patch, clamped to [0, 1].
class CornerTagWatermarkScorer final : public Scorer {
 public:
  std::string_view name() const override { return "corner_tag"; }
  double score(const RgbImage& image, std::string_view sample_id) const override;
};

// Precomputed scores keyed by sample id, loaded from a CSV file with rows
// `id,score` (an `id,score` header line is optional).
class SidecarScorer final : public Scorer {
 public:
  explicit SidecarScorer(const std::filesystem::path& csv_path);
  std::string_view name() const override { return name_; }
  double score(const RgbImage& image, std::string_view sample_id) const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::string name_;
  std::unordered_map<std::string, double> scores_;
};

// Builds a scorer from a textual spec: "heuristic", "corner_tag",
// "const:<value>" or "sidecar:<path>".
ScorerHandle make_scorer(std::string_view spec);

}  // namespace lacon
