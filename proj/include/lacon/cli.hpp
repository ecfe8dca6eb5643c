#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lacon/encoder.hpp"
#include "lacon/flowmodel.hpp"
#include "lacon/sampler.hpp"
#include "lacon/signals.hpp"

namespace lacon {

struct LabelSettings {
  int target_long_side = kDefaultNormalizedLongSide;
  std::string aes_scorer = "heuristic";
  std::string wat_scorer = "corner_tag";

  LabelConfig resolve() const;
};

// Scores that override only the attributes they name.
using PartialQuality = std::array<std::optional<double>, kNumAttributes>;

QualityVector apply_partial(QualityVector base, const PartialQuality& patch);

struct SamplerSettings {
  int steps = 50;
  int count = 16;
  GuidanceMode mode = GuidanceMode::lacon_s;
  double omega_c = 4.0;
  std::array<double, kNumAttributes> omega{};
  QualityVector targets = default_high_quality_targets();
  PartialQuality s_base;  // unset attributes fall back to the checkpoint's medians
  std::optional<int> class_label;  // unset: alternate over the classes
};

// Declarative run configuration; command-line flags take precedence.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  TrainConfig train;
  InjectionKind strategy = InjectionKind::gcc;
  AnchorSpecs anchors = default_anchor_specs();
  LabelSettings label;
  SamplerSettings sampler;

  // Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string digest() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

// "aes=7,luma=0.5" style lists.
PartialQuality parse_attribute_list(std::string_view text);

// --workers, then LACON_WORKERS, then the logical core count.
int resolve_workers(std::optional<int> flag);

// Entry point for the `lacon` binary: args excludes the program name.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lacon
