#include "lacon/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lacon {

ConstantScorer::ConstantScorer(double value, std::string name) : value_(value), name_(std::move(name)) {}

double HeuristicAestheticScorer::score(const RgbImage& image, std::string_view) const {
  const int w = image.width();
  const int h = image.height();
  std::vector<double> gray;
  gray.reserve(image.size());
  for (const Rgb& p : image.pixels()) gray.push_back(0.299 * p.r + 0.587 * p.g + 0.114 * p.b);

  double mean = 0.0;
  for (double v : gray) mean += v;
  mean /= static_cast<double>(gray.size());
  double var = 0.0;
  for (double v : gray) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / static_cast<double>(gray.size()));

  double roughness = 0.0;
  if (w >= 3 && h >= 3) {
    auto at = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
    double sum = 0.0;
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        sum += std::abs(at(x, y - 1) + at(x - 1, y) + at(x + 1, y) + at(x, y + 1) - 4.0 * at(x, y));
      }
    }
    roughness = sum / static_cast<double>((w - 2) * (h - 2));
  }

  const double contrast = std::min(1.0, stddev / 0.25);
  const double exposure = 1.0 - 2.0 * std::abs(mean - 0.5);
  const double smoothness = 1.0 - std::min(1.0, roughness / 0.5);
  return std::clamp(10.0 * (0.4 * contrast + 0.3 * exposure + 0.3 * smoothness), 0.0, 10.0);
}

double CornerTagWatermarkScorer::score(const RgbImage& image, std::string_view) const {
  if (image.width() < kCornerTagSize || image.height() < kCornerTagSize) return 0.0;
  // The centred template is +-0.5 and sums to zero, so projecting the raw
  // patch equals projecting the mean-removed patch.
  double projection = 0.0;
  double norm = 0.0;
  for (int y = 0; y < kCornerTagSize; ++y) {
    for (int x = 0; x < kCornerTagSize; ++x) {
      const Rgb& p = image(x, y);
      const double v = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
      const double t = corner_tag_value(x, y) - 0.5;
      projection += v * t;
      norm += t * t;
    }
  }
  return std::clamp(projection / norm, 0.0, 1.0);
}

SidecarScorer::SidecarScorer(const std::filesystem::path& csv_path) : name_("sidecar:" + csv_path.string()) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open sidecar score file '" + csv_path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(name_ + ": malformed line " + std::to_string(line_no));
    }
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (line_no == 1 && id == "id" && value == "score") continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw std::runtime_error(name_ + ": bad score on line " + std::to_string(line_no));
    }
    scores_[id] = v;
  }
}

double SidecarScorer::score(const RgbImage&, std::string_view sample_id) const {
  const auto it = scores_.find(std::string(sample_id));
  if (it == scores_.end()) {
    throw ScorerError(name_ + ": no score for sample '" + std::string(sample_id) + "'");
  }
  return it->second;
}

ScorerHandle make_scorer(std::string_view spec) {
  if (spec == "heuristic") return std::make_shared<HeuristicAestheticScorer>();
  if (spec == "corner_tag") return std::make_shared<CornerTagWatermarkScorer>();
  if (spec.starts_with("const:")) {
    const std::string value(spec.substr(6));
    return std::make_shared<ConstantScorer>(std::stod(value), std::string(spec));
  }
  if (spec.starts_with("sidecar:")) {
    return std::make_shared<SidecarScorer>(std::filesystem::path(std::string(spec.substr(8))));
  }
  throw std::invalid_argument("unknown scorer '" + std::string(spec) +
                              "' (valid: heuristic, corner_tag, const:<v>, sidecar:<csv>)");
}

}  // namespace lacon
