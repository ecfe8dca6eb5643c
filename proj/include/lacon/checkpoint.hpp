#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>

#include "lacon/encoder.hpp"
#include "lacon/flowmodel.hpp"

namespace lacon {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  AnchorSpecs specs;
  std::int64_t step = 0;
  std::string config_digest;
  QualityVector s_base_default;  // attribute-wise medians of the training data
  VelocityNet net;
};

// SHA-256 of the canonical JSON of everything that shapes a training run.
std::string train_config_digest(const TrainConfig& config, InjectionKind strategy, const AnchorSpecs& specs);

// Binary container: "LACONCKP", u32 version, u64 header length, JSON header
// (config, strategy, anchors, step, digest, tensor table), then raw
// little-endian float64 tensor data in column-major order.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Written to a temporary sibling then renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnchorSpecs& specs);
AnchorSpecs anchor_specs_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QualityVector& q);
QualityVector quality_from_json(const nlohmann::json& j);

}  // namespace lacon
