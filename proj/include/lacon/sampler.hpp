#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lacon/flowmodel.hpp"
#include "lacon/quality.hpp"
#include "lacon/signals.hpp"

namespace lacon {

enum class GuidanceMode { cfg, lacon_s, lacon_a };

// "cfg", "lacon-s", "lacon-a".
std::string_view mode_name(GuidanceMode mode);
GuidanceMode parse_mode(std::string_view name);

// aes 7, wat 0.05, cla 2500, ent 7, luma 0.5.
QualityVector default_high_quality_targets();

struct GuidanceSpec {
  double omega_c = 1.0;
  std::array<double, kNumAttributes> omega{};  // per-attribute scales
  QualityVector s_base;
  // s_target[k] equals s_base except in attribute k.
  std::array<QualityVector, kNumAttributes> s_target;

  // Builds s_target[k] from s_base by swapping in targets[k].
  static GuidanceSpec with_targets(double omega_c, const std::array<double, kNumAttributes>& omega,
                                   const QualityVector& s_base, const QualityVector& targets);

  void validate() const;
};

struct SamplerConfig {
  int steps = 50;
  std::uint64_t seed = 0;
  int count = 1;
  GuidanceMode mode = GuidanceMode::lacon_s;

  void validate() const;
};

// x_1 ~ N(0, I), D x count, drawn from `seed` alone.
Eigen::MatrixXd initial_noise(int dim, int count, std::uint64_t seed);

// v_uncond + omega_c (v_cond - v_uncond) with the same s for both passes,
// evaluated as (1 - omega_c) v_uncond + omega_c v_cond so omega_c = 1 gives
// v_cond exactly.
Eigen::MatrixXd cfg_velocity(const VelocityField& net, const Eigen::MatrixXd& x_t, double t, std::span<const int> classes,
                             const QualityVector& s, double omega_c);

// v_base + omega_c (v_text - v_base) + sum_k omega_k (v_k - v_text); seven
// network evaluations. The first two terms use the same form as cfg_velocity.
Eigen::MatrixXd lacon_a_velocity(const VelocityField& net, const Eigen::MatrixXd& x_t, double t,
                                 std::span<const int> classes, const GuidanceSpec& g);

// Euler from t = 1 to t = 0 in cfg.steps steps, output clamped to [-1, 1].
// `classes` holds one label per sample (cfg.count entries). Throws
// std::runtime_error if the state becomes non-finite.
Eigen::MatrixXd euler_sample(const VelocityField& net, std::span<const int> classes, const QualityVector& s,
                             const SamplerConfig& cfg, double omega_c);
Eigen::MatrixXd lacon_a_sample(const VelocityField& net, std::span<const int> classes, const GuidanceSpec& g,
                               const SamplerConfig& cfg);

// Dispatches on cfg.mode: cfg uses s_base, lacon-s uses `lacon_s_target`,
// lacon-a the full spec.
Eigen::MatrixXd sample(const VelocityField& net, std::span<const int> classes, const GuidanceSpec& g,
                       const QualityVector& lacon_s_target, const SamplerConfig& cfg);

// [-1, 1] column back to a [0, 1] gray image replicated over RGB.
RgbImage column_to_image(const Eigen::Ref<const Eigen::VectorXd>& column, int side);

// Labels every generated column, in order.
std::vector<QualityVector> measure_outputs(const Eigen::MatrixXd& samples, int side, const LabelConfig& config);

// One cell of a controllability sweep: s_base with `attribute` moved to
// `target`, sampled cfg.count times with classes alternating i % num_classes.
// lacon-s conditions directly on the moved vector; lacon-a keeps s_base and
// guides toward it with scale `omega_attr`; cfg samples at s_base.
struct SweepResult {
  Attribute attribute = Attribute::aes;
  double target = 0.0;
  GuidanceMode mode = GuidanceMode::lacon_s;
  double omega_c = 0.0;
  std::vector<QualityVector> measured;

  double mean() const;
  double stddev() const;  // population
};

SweepResult sweep_setting(const VelocityField& net, int num_classes, int side, const QualityVector& s_base,
                          Attribute attribute, double target, const SamplerConfig& cfg, double omega_c,
                          double omega_attr, const LabelConfig& label);

}  // namespace lacon
