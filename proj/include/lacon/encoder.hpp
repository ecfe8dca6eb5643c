#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lacon/nn.hpp"
#include "lacon/quality.hpp"

namespace lacon {

// Fixed, uniformly spaced anchors for one attribute. The RBF width is half the
// anchor spacing.
struct AttributeAnchorSpec {
  Attribute attribute = Attribute::aes;
  std::vector<double> anchors;
  double spacing = 1.0;
  double sigma = 0.5;
  std::optional<double> clip_max;

  static AttributeAnchorSpec uniform(Attribute attribute, double first, double spacing, int count,
                                     std::optional<double> clip_max = std::nullopt);

  int size() const { return static_cast<int>(anchors.size()); }
  double range_min() const { return anchors.front() - 0.5 * spacing; }
  double range_max() const { return clip_max.value_or(anchors.back() + 0.5 * spacing); }

  // Clipped attributes clamp into [0, clip_max]; the others into
  // [range_min, range_max].
  double clamp(double s) const;

  // Upper edge of anchor cell `i`. Cells are half-open (lo, hi], so a score
  // equal to an edge belongs to the lower cell.
  double cell_upper_edge(int i) const { return range_min() + (i + 1) * spacing; }

  // Throws std::invalid_argument on a malformed spec.
  void validate() const;
};

using AnchorSpecs = std::array<AttributeAnchorSpec, kNumAttributes>;

// aes 0.5..9.5, wat 0.05..0.95, cla 150..2850 (clip 3000), ent 0.5..7.5,
// luma 0.05..0.95.
AnchorSpecs default_anchor_specs();

void validate_specs(const AnchorSpecs& specs);

// Normalized Gaussian affinities of the clamped score to every anchor.
Eigen::VectorXd rbf_weights(double s, const AttributeAnchorSpec& spec);

// Weighted sum of the centroid rows (N x d) under rbf_weights.
Eigen::VectorXd embed_attribute(double s, const AttributeAnchorSpec& spec, const Eigen::MatrixXd& centroids);

// Learnable centroid rows, one N_k x d block per attribute.
struct CentroidTable {
  std::array<Eigen::MatrixXd, kNumAttributes> blocks;

  int dim() const { return static_cast<int>(blocks[0].cols()); }

  static CentroidTable zeros(const AnchorSpecs& specs, int d);
  // i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)].
  static CentroidTable random(const AnchorSpecs& specs, int d, nn::Rng& rng);

  void validate(const AnchorSpecs& specs) const;
};

// One d-dimensional vector per attribute, in canonical attribute order.
using ConditionEmbedding = std::array<Eigen::VectorXd, kNumAttributes>;

ConditionEmbedding embed_vector(const QualityVector& s, const CentroidTable& table, const AnchorSpecs& specs);

// Gradient of a loss w.r.t. every centroid row given dL/de_k per attribute:
// row i of block k is w_i^(k) * g_k.
CentroidTable backprop_to_centroids(const QualityVector& s, const ConditionEmbedding& upstream,
                                    const AnchorSpecs& specs);

enum class InjectionKind { gcc, linear_interpolation, discrete_binning, fourier_feature };

std::string_view injection_name(InjectionKind kind);
InjectionKind parse_injection(std::string_view name);

// Interpolation coefficient between the range endpoints, clamped to [0, 1].
double linear_alpha(double s, const AttributeAnchorSpec& spec);

// Index of the anchor cell holding the clamped score; edges go to the lower cell.
int discrete_bin(double s, const AttributeAnchorSpec& spec);

inline constexpr int kFourierFrequencies = 8;

// 0.5, 1, 2, ..., 64 cycles over the normalized score range.
std::array<double, kFourierFrequencies> fourier_frequencies();

// [sin(2 pi f s_hat)..., cos(2 pi f s_hat)...] with s_hat the min-max
// normalized clamped score.
Eigen::VectorXd fourier_features(double s, const AttributeAnchorSpec& spec);

// Per-attribute intermediate values kept by encode() for backward().
struct EncoderCache {
  std::vector<QualityVector> scores;
  std::array<Eigen::MatrixXd, kNumAttributes> primary;
  std::array<Eigen::MatrixXd, kNumAttributes> secondary;
};

// Maps quality vectors to stacked condition embeddings. encode() is pure given
// the parameters; backward() accumulates into the parameter gradients.
class ConditionEncoder {
 public:
  virtual ~ConditionEncoder() = default;

  virtual InjectionKind kind() const = 0;

  int dim() const { return dim_; }
  int output_dim() const { return static_cast<int>(kNumAttributes) * dim_; }
  const AnchorSpecs& specs() const { return specs_; }

  // (5d) x B: attribute blocks stacked in canonical order.
  virtual Eigen::MatrixXd encode(std::span<const QualityVector> batch, EncoderCache* cache = nullptr) const = 0;
  virtual void backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) = 0;

  virtual std::vector<nn::Param*> parameters() = 0;
  virtual std::unique_ptr<ConditionEncoder> clone() const = 0;

  std::vector<const nn::Param*> parameters() const;

 protected:
  ConditionEncoder(AnchorSpecs specs, int d);

  AnchorSpecs specs_;
  int dim_;
};

class GccEncoder final : public ConditionEncoder {
 public:
  GccEncoder(AnchorSpecs specs, int d, nn::Rng& rng);
  GccEncoder(AnchorSpecs specs, CentroidTable table);

  InjectionKind kind() const override { return InjectionKind::gcc; }
  Eigen::MatrixXd encode(std::span<const QualityVector> batch, EncoderCache* cache = nullptr) const override;
  void backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) override;
  std::vector<nn::Param*> parameters() override;
  std::unique_ptr<ConditionEncoder> clone() const override;

  CentroidTable table() const;

 private:
  std::array<nn::Param, kNumAttributes> centroids_;
};

// Two tokens per attribute at the range endpoints, blended linearly.
class LinearInterpolationEncoder final : public ConditionEncoder {
 public:
  LinearInterpolationEncoder(AnchorSpecs specs, int d, nn::Rng& rng);

  InjectionKind kind() const override { return InjectionKind::linear_interpolation; }
  Eigen::MatrixXd encode(std::span<const QualityVector> batch, EncoderCache* cache = nullptr) const override;
  void backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) override;
  std::vector<nn::Param*> parameters() override;
  std::unique_ptr<ConditionEncoder> clone() const override;

  // Row 0 is the range-minimum token, row 1 the range-maximum token.
  nn::Param& endpoints(Attribute a) { return endpoints_[index_of(a)]; }

 private:
  std::array<nn::Param, kNumAttributes> endpoints_;
};

// One token per anchor cell; a score selects its cell's token.
class DiscreteBinningEncoder final : public ConditionEncoder {
 public:
  DiscreteBinningEncoder(AnchorSpecs specs, int d, nn::Rng& rng);

  InjectionKind kind() const override { return InjectionKind::discrete_binning; }
  Eigen::MatrixXd encode(std::span<const QualityVector> batch, EncoderCache* cache = nullptr) const override;
  void backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) override;
  std::vector<nn::Param*> parameters() override;
  std::unique_ptr<ConditionEncoder> clone() const override;

  nn::Param& tokens(Attribute a) { return tokens_[index_of(a)]; }

 private:
  std::array<nn::Param, kNumAttributes> tokens_;
};

// Sinusoidal features of the normalized score through a two-layer SiLU
// network of hidden width 4d.
class FourierFeatureEncoder final : public ConditionEncoder {
 public:
  FourierFeatureEncoder(AnchorSpecs specs, int d, nn::Rng& rng);

  InjectionKind kind() const override { return InjectionKind::fourier_feature; }
  Eigen::MatrixXd encode(std::span<const QualityVector> batch, EncoderCache* cache = nullptr) const override;
  void backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) override;
  std::vector<nn::Param*> parameters() override;
  std::unique_ptr<ConditionEncoder> clone() const override;

 private:
  std::array<nn::Dense, kNumAttributes> hidden_;
  std::array<nn::Dense, kNumAttributes> output_;
};

std::unique_ptr<ConditionEncoder> make_encoder(InjectionKind kind, const AnchorSpecs& specs, int d, nn::Rng& rng);

// Single-vector embedding under any strategy; GCC goes through embed_vector.
ConditionEmbedding embed_vector_strategy(const QualityVector& s, const ConditionEncoder& strategy);

}  // namespace lacon
