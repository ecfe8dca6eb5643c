#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lacon/image.hpp"
#include "lacon/quality.hpp"
#include "lacon/signals.hpp"

namespace lacon {

struct SampleRecord {
  std::string id;
  std::string image_ref;  // PNG path or "synth:<seed>:<index>"
  int class_label = 0;
  QualityVector quality;

  bool operator==(const SampleRecord&) const = default;
};

// Records sorted by id, plus the digest of the labeling configuration that
// produced their scores.
struct Manifest {
  std::vector<SampleRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct CorpusItem {
  std::string id;
  std::string image_ref;
  int class_label = 0;
};

// Every *.png in `dir` (sorted by name), id = file stem. Class labels come from
// an optional `index.csv` (`file,class_label`); unlisted files get class 0.
// Throws std::runtime_error if the directory does not exist.
std::vector<CorpusItem> directory_corpus(const std::filesystem::path& dir);

// Items referencing the procedural generator, ids "synth-000000"...
std::vector<CorpusItem> synthetic_corpus(std::size_t n, std::uint64_t seed);

// Decodes a PNG path or regenerates a "synth:" reference.
RgbImage load_image_ref(std::string_view ref);

std::string labeling_digest(const LabelConfig& config);

struct SkippedItem {
  std::string id;
  std::string image_ref;
  std::string reason;
};

struct BuildResult {
  Manifest manifest;
  std::vector<SkippedItem> skipped;
};

// Labels every item on `workers` threads (0 = hardware concurrency) and sorts
// by id. Undecodable images are skipped with a reason; a duplicate id or a
// failing scorer throws.
BuildResult build_manifest(std::span<const CorpusItem> items, const LabelConfig& config, int workers = 1);

// JSON-Lines, fields in fixed order, scores with 9 significant digits.
std::string manifest_to_jsonl(const Manifest& manifest);
Manifest manifest_from_jsonl(std::string_view text);

// The provenance digest goes to a sidecar `<path>.provenance` file.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Conjunctive keep-rule. Watermark is an upper bound on the watermark
// probability.
struct FilterThresholds {
  double aes_min = 0.0;
  double wat_max = 1.0;
  double cla_min = 0.0;
  double ent_min = 0.0;
  double luma_min = 0.0;
  double luma_max = 1.0;

  static FilterThresholds permissive() { return {}; }
  void validate() const;
  bool keeps(const QualityVector& q) const;
  bool operator==(const FilterThresholds&) const = default;
};

struct FilterPreset {
  std::string_view name;
  FilterThresholds thresholds;
};

// ratio5, ratio30, ratio50, ratio65, ratio80.
std::span<const FilterPreset> filter_presets();

// Throws std::invalid_argument listing the valid preset names.
FilterThresholds filter_preset(std::string_view name);

Manifest apply_filter(const Manifest& manifest, const FilterThresholds& thresholds);

struct AttributeHistogram {
  Attribute attribute = Attribute::aes;
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  std::vector<double> proportions;
};

using HistogramTable = std::array<AttributeHistogram, kNumAttributes>;

// Histogram support per attribute: the declared range, with clarity capped at
// its 3000 clip. Values outside fall into the edge bins.
ValueRange histogram_range(Attribute a);

HistogramTable score_histograms(std::span<const QualityVector> scores, const std::array<int, kNumAttributes>& bins);
HistogramTable score_histograms(const Manifest& manifest, const std::array<int, kNumAttributes>& bins);
HistogramTable score_histograms(const Manifest& manifest, int bins);

// CSV columns: attribute,bin_lo,bin_hi,count,proportion.
std::string histograms_to_csv(const HistogramTable& table);

// Attribute-wise medians; throws on an empty manifest.
QualityVector attribute_medians(const Manifest& manifest);

}  // namespace lacon
