#include "lacon/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lacon {
namespace {

std::string attr_str(Attribute a) { return std::string(attribute_name(a)); }

void check_batch_grad(const Eigen::MatrixXd& grad, int rows, std::size_t cols) {
  if (grad.rows() != rows || grad.cols() != static_cast<Eigen::Index>(cols)) {
    throw std::invalid_argument("encoder gradient shape does not match the cached batch");
  }
}

}  // namespace

AttributeAnchorSpec AttributeAnchorSpec::uniform(Attribute attribute, double first, double spacing, int count,
                                                 std::optional<double> clip_max) {
  AttributeAnchorSpec spec;
  spec.attribute = attribute;
  spec.spacing = spacing;
  spec.sigma = 0.5 * spacing;
  spec.clip_max = clip_max;
  spec.anchors.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) spec.anchors.push_back(first + i * spacing);
  spec.validate();
  return spec;
}

double AttributeAnchorSpec::clamp(double s) const {
  if (std::isnan(s)) throw std::invalid_argument("score for '" + attr_str(attribute) + "' is NaN");
  if (clip_max) return std::clamp(s, 0.0, *clip_max);
  return std::clamp(s, range_min(), range_max());
}

void AttributeAnchorSpec::validate() const {
  const std::string name = attr_str(attribute);
  if (anchors.size() < 2) throw std::invalid_argument(name + ": at least two anchors required");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument(name + ": spacing must be positive");
  const double tol = 1e-9 * spacing;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (!(anchors[i] > anchors[i - 1]) || std::abs(anchors[i] - anchors[i - 1] - spacing) > tol) {
      throw std::invalid_argument(name + ": anchors must be strictly increasing and uniformly spaced");
    }
  }
  if (std::abs(sigma - 0.5 * spacing) > tol) {
    throw std::invalid_argument(name + ": sigma must be half the anchor spacing");
  }
  if (clip_max && !(*clip_max > anchors.back())) {
    throw std::invalid_argument(name + ": clip_max must lie above the last anchor");
  }
}

AnchorSpecs default_anchor_specs() {
  return {
      AttributeAnchorSpec::uniform(Attribute::aes, 0.5, 1.0, 10),
      AttributeAnchorSpec::uniform(Attribute::wat, 0.05, 0.1, 10),
      AttributeAnchorSpec::uniform(Attribute::cla, 150.0, 300.0, 10, 3000.0),
      AttributeAnchorSpec::uniform(Attribute::ent, 0.5, 1.0, 8),
      AttributeAnchorSpec::uniform(Attribute::luma, 0.05, 0.1, 10),
  };
}

void validate_specs(const AnchorSpecs& specs) {
  for (Attribute a : kAllAttributes) {
    const AttributeAnchorSpec& spec = specs[index_of(a)];
    if (spec.attribute != a) {
      throw std::invalid_argument("anchor spec at position of '" + attr_str(a) + "' describes '" +
                                  attr_str(spec.attribute) + "'");
    }
    spec.validate();
  }
}

Eigen::VectorXd rbf_weights(double s, const AttributeAnchorSpec& spec) {
  const double c = spec.clamp(s);
  const int n = spec.size();
  const double denom = 2.0 * spec.sigma * spec.sigma;
  Eigen::VectorXd logits(n);
  for (int i = 0; i < n; ++i) {
    const double diff = c - spec.anchors[static_cast<std::size_t>(i)];
    logits(i) = -diff * diff / denom;
  }
  // The nearest anchor is within sigma, so shifting by the max keeps every
  // exponent well inside double range.
  const double peak = logits.maxCoeff();
  Eigen::VectorXd u = (logits.array() - peak).exp().matrix();
  return u / u.sum();
}

Eigen::VectorXd embed_attribute(double s, const AttributeAnchorSpec& spec, const Eigen::MatrixXd& centroids) {
  if (centroids.rows() != spec.size()) {
    throw std::invalid_argument("centroid block for '" + attr_str(spec.attribute) + "' has " +
                                std::to_string(centroids.rows()) + " rows, expected " +
                                std::to_string(spec.size()));
  }
  return centroids.transpose() * rbf_weights(s, spec);
}

CentroidTable CentroidTable::zeros(const AnchorSpecs& specs, int d) {
  if (d < 1) throw std::invalid_argument("centroid dimension must be positive");
  CentroidTable table;
  for (Attribute a : kAllAttributes) table.blocks[index_of(a)] = Eigen::MatrixXd::Zero(specs[index_of(a)].size(), d);
  return table;
}

CentroidTable CentroidTable::random(const AnchorSpecs& specs, int d, nn::Rng& rng) {
  if (d < 1) throw std::invalid_argument("centroid dimension must be positive");
  CentroidTable table;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (Attribute a : kAllAttributes) {
    table.blocks[index_of(a)] = nn::uniform_matrix(specs[index_of(a)].size(), d, bound, rng);
  }
  return table;
}

void CentroidTable::validate(const AnchorSpecs& specs) const {
  const Eigen::Index d = blocks[0].cols();
  for (Attribute a : kAllAttributes) {
    const Eigen::MatrixXd& block = blocks[index_of(a)];
    if (block.rows() != specs[index_of(a)].size() || block.cols() != d) {
      throw std::invalid_argument("centroid table block '" + attr_str(a) + "' has the wrong shape");
    }
    if (!block.allFinite()) throw std::invalid_argument("centroid table block '" + attr_str(a) + "' is not finite");
  }
}

ConditionEmbedding embed_vector(const QualityVector& s, const CentroidTable& table, const AnchorSpecs& specs) {
  ConditionEmbedding e;
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    e[k] = embed_attribute(s[a], specs[k], table.blocks[k]);
  }
  return e;
}

CentroidTable backprop_to_centroids(const QualityVector& s, const ConditionEmbedding& upstream,
                                    const AnchorSpecs& specs) {
  const Eigen::Index d = upstream[0].size();
  CentroidTable grad;
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    if (upstream[k].size() != d) {
      throw std::invalid_argument("upstream gradient for '" + attr_str(a) + "' has inconsistent width");
    }
    grad.blocks[k] = rbf_weights(s[a], specs[k]) * upstream[k].transpose();
  }
  return grad;
}

std::string_view injection_name(InjectionKind kind) {
  switch (kind) {
    case InjectionKind::gcc: return "gcc";
    case InjectionKind::linear_interpolation: return "linear";
    case InjectionKind::discrete_binning: return "binning";
    case InjectionKind::fourier_feature: return "fourier";
  }
  return "?";
}

InjectionKind parse_injection(std::string_view name) {
  for (InjectionKind k : {InjectionKind::gcc, InjectionKind::linear_interpolation, InjectionKind::discrete_binning,
                          InjectionKind::fourier_feature}) {
    if (injection_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown injection strategy '" + std::string(name) +
                              "' (valid: gcc, linear, binning, fourier)");
}

double linear_alpha(double s, const AttributeAnchorSpec& spec) {
  const double lo = spec.range_min();
  const double hi = spec.range_max();
  return std::clamp((spec.clamp(s) - lo) / (hi - lo), 0.0, 1.0);
}

int discrete_bin(double s, const AttributeAnchorSpec& spec) {
  const double c = spec.clamp(s);
  int bin = 0;
  while (bin + 1 < spec.size() && c > spec.cell_upper_edge(bin)) ++bin;
  return bin;
}

std::array<double, kFourierFrequencies> fourier_frequencies() {
  std::array<double, kFourierFrequencies> f{};
  for (int j = 0; j < kFourierFrequencies; ++j) f[static_cast<std::size_t>(j)] = 0.5 * std::ldexp(1.0, j);
  return f;
}

Eigen::VectorXd fourier_features(double s, const AttributeAnchorSpec& spec) {
  const double s_hat = linear_alpha(s, spec);
  const auto freqs = fourier_frequencies();
  Eigen::VectorXd phi(2 * kFourierFrequencies);
  for (int j = 0; j < kFourierFrequencies; ++j) {
    const double angle = 2.0 * std::numbers::pi * freqs[static_cast<std::size_t>(j)] * s_hat;
    phi(j) = std::sin(angle);
    phi(kFourierFrequencies + j) = std::cos(angle);
  }
  return phi;
}

ConditionEncoder::ConditionEncoder(AnchorSpecs specs, int d) : specs_(std::move(specs)), dim_(d) {
  validate_specs(specs_);
  if (d < 1) throw std::invalid_argument("condition width must be positive");
}

std::vector<const nn::Param*> ConditionEncoder::parameters() const {
  auto params = const_cast<ConditionEncoder*>(this)->parameters();
  return {params.begin(), params.end()};
}

// --- GCC ---------------------------------------------------------------

GccEncoder::GccEncoder(AnchorSpecs specs, int d, nn::Rng& rng) : ConditionEncoder(std::move(specs), d) {
  const CentroidTable table = CentroidTable::random(specs_, d, rng);
  for (Attribute a : kAllAttributes) {
    centroids_[index_of(a)] = nn::Param("encoder.gcc." + attr_str(a) + ".centroids", table.blocks[index_of(a)]);
  }
}

GccEncoder::GccEncoder(AnchorSpecs specs, CentroidTable table) : ConditionEncoder(std::move(specs), table.dim()) {
  table.validate(specs_);
  for (Attribute a : kAllAttributes) {
    centroids_[index_of(a)] = nn::Param("encoder.gcc." + attr_str(a) + ".centroids", table.blocks[index_of(a)]);
  }
}

Eigen::MatrixXd GccEncoder::encode(std::span<const QualityVector> batch, EncoderCache* cache) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(output_dim(), n);
  if (cache) cache->scores.assign(batch.begin(), batch.end());
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    Eigen::MatrixXd weights(n, specs_[k].size());
    for (Eigen::Index b = 0; b < n; ++b) {
      weights.row(b) = rbf_weights(batch[static_cast<std::size_t>(b)][a], specs_[k]).transpose();
    }
    out.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_).noalias() =
        centroids_[k].value.transpose() * weights.transpose();
    if (cache) cache->primary[k] = std::move(weights);
  }
  return out;
}

void GccEncoder::backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) {
  check_batch_grad(grad, output_dim(), cache.scores.size());
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    const auto g = grad.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    centroids_[k].grad.noalias() += cache.primary[k].transpose() * g.transpose();
  }
}

std::vector<nn::Param*> GccEncoder::parameters() {
  std::vector<nn::Param*> out;
  for (auto& p : centroids_) out.push_back(&p);
  return out;
}

std::unique_ptr<ConditionEncoder> GccEncoder::clone() const { return std::make_unique<GccEncoder>(*this); }

CentroidTable GccEncoder::table() const {
  CentroidTable t;
  for (std::size_t k = 0; k < kNumAttributes; ++k) t.blocks[k] = centroids_[k].value;
  return t;
}

// --- Linear interpolation -------------------------------------------------

LinearInterpolationEncoder::LinearInterpolationEncoder(AnchorSpecs specs, int d, nn::Rng& rng)
    : ConditionEncoder(std::move(specs), d) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (Attribute a : kAllAttributes) {
    endpoints_[index_of(a)] = nn::Param("encoder.linear." + attr_str(a) + ".endpoints", nn::uniform_matrix(2, d, bound, rng));
  }
}

Eigen::MatrixXd LinearInterpolationEncoder::encode(std::span<const QualityVector> batch, EncoderCache* cache) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(output_dim(), n);
  if (cache) cache->scores.assign(batch.begin(), batch.end());
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    Eigen::RowVectorXd alpha(n);
    for (Eigen::Index b = 0; b < n; ++b) alpha(b) = linear_alpha(batch[static_cast<std::size_t>(b)][a], specs_[k]);
    const Eigen::MatrixXd& tokens = endpoints_[k].value;
    auto block = out.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    for (Eigen::Index b = 0; b < n; ++b) {
      block.col(b) = (1.0 - alpha(b)) * tokens.row(0).transpose() + alpha(b) * tokens.row(1).transpose();
    }
    if (cache) cache->primary[k] = alpha;
  }
  return out;
}

void LinearInterpolationEncoder::backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) {
  check_batch_grad(grad, output_dim(), cache.scores.size());
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    const auto g = grad.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    const Eigen::VectorXd alpha = cache.primary[k].row(0).transpose();
    const Eigen::VectorXd one_minus = Eigen::VectorXd::Ones(alpha.size()) - alpha;
    endpoints_[k].grad.row(0) += (g * one_minus).transpose();
    endpoints_[k].grad.row(1) += (g * alpha).transpose();
  }
}

std::vector<nn::Param*> LinearInterpolationEncoder::parameters() {
  std::vector<nn::Param*> out;
  for (auto& p : endpoints_) out.push_back(&p);
  return out;
}

std::unique_ptr<ConditionEncoder> LinearInterpolationEncoder::clone() const {
  return std::make_unique<LinearInterpolationEncoder>(*this);
}

// --- Discrete binning -----------------------------------------------------

DiscreteBinningEncoder::DiscreteBinningEncoder(AnchorSpecs specs, int d, nn::Rng& rng)
    : ConditionEncoder(std::move(specs), d) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (Attribute a : kAllAttributes) {
    tokens_[index_of(a)] = nn::Param("encoder.binning." + attr_str(a) + ".tokens",
                                     nn::uniform_matrix(specs_[index_of(a)].size(), d, bound, rng));
  }
}

Eigen::MatrixXd DiscreteBinningEncoder::encode(std::span<const QualityVector> batch, EncoderCache* cache) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(output_dim(), n);
  if (cache) cache->scores.assign(batch.begin(), batch.end());
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    Eigen::RowVectorXd bins(n);
    auto block = out.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    for (Eigen::Index b = 0; b < n; ++b) {
      const int bin = discrete_bin(batch[static_cast<std::size_t>(b)][a], specs_[k]);
      bins(b) = bin;
      block.col(b) = tokens_[k].value.row(bin).transpose();
    }
    if (cache) cache->primary[k] = bins;
  }
  return out;
}

void DiscreteBinningEncoder::backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) {
  check_batch_grad(grad, output_dim(), cache.scores.size());
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    const auto g = grad.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    for (Eigen::Index b = 0; b < g.cols(); ++b) {
      const auto bin = static_cast<Eigen::Index>(cache.primary[k](0, b));
      tokens_[k].grad.row(bin) += g.col(b).transpose();
    }
  }
}

std::vector<nn::Param*> DiscreteBinningEncoder::parameters() {
  std::vector<nn::Param*> out;
  for (auto& p : tokens_) out.push_back(&p);
  return out;
}

std::unique_ptr<ConditionEncoder> DiscreteBinningEncoder::clone() const {
  return std::make_unique<DiscreteBinningEncoder>(*this);
}

// --- Fourier features -----------------------------------------------------

FourierFeatureEncoder::FourierFeatureEncoder(AnchorSpecs specs, int d, nn::Rng& rng)
    : ConditionEncoder(std::move(specs), d) {
  for (Attribute a : kAllAttributes) {
    const std::string base = "encoder.fourier." + attr_str(a);
    hidden_[index_of(a)] = nn::Dense(base + ".hidden", 2 * kFourierFrequencies, 4 * d, rng);
    output_[index_of(a)] = nn::Dense(base + ".output", 4 * d, d, rng);
  }
}

Eigen::MatrixXd FourierFeatureEncoder::encode(std::span<const QualityVector> batch, EncoderCache* cache) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(output_dim(), n);
  if (cache) cache->scores.assign(batch.begin(), batch.end());
  for (Attribute a : kAllAttributes) {
    const std::size_t k = index_of(a);
    Eigen::MatrixXd features(2 * kFourierFrequencies, n);
    for (Eigen::Index b = 0; b < n; ++b) features.col(b) = fourier_features(batch[static_cast<std::size_t>(b)][a], specs_[k]);
    Eigen::MatrixXd pre = hidden_[k].forward(features);
    out.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_) = output_[k].forward(nn::silu(pre));
    if (cache) {
      cache->primary[k] = std::move(features);
      cache->secondary[k] = std::move(pre);
    }
  }
  return out;
}

void FourierFeatureEncoder::backward(const EncoderCache& cache, const Eigen::MatrixXd& grad) {
  check_batch_grad(grad, output_dim(), cache.scores.size());
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    const Eigen::MatrixXd g = grad.middleRows(static_cast<Eigen::Index>(k) * dim_, dim_);
    const Eigen::MatrixXd& pre = cache.secondary[k];
    const Eigen::MatrixXd grad_act = output_[k].backward(nn::silu(pre), g);
    hidden_[k].backward(cache.primary[k], nn::silu_backward(pre, grad_act));
  }
}

std::vector<nn::Param*> FourierFeatureEncoder::parameters() {
  std::vector<nn::Param*> out;
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    out.push_back(&hidden_[k].weight());
    out.push_back(&hidden_[k].bias());
    out.push_back(&output_[k].weight());
    out.push_back(&output_[k].bias());
  }
  return out;
}

std::unique_ptr<ConditionEncoder> FourierFeatureEncoder::clone() const {
  return std::make_unique<FourierFeatureEncoder>(*this);
}

std::unique_ptr<ConditionEncoder> make_encoder(InjectionKind kind, const AnchorSpecs& specs, int d, nn::Rng& rng) {
  switch (kind) {
    case InjectionKind::gcc: return std::make_unique<GccEncoder>(specs, d, rng);
    case InjectionKind::linear_interpolation: return std::make_unique<LinearInterpolationEncoder>(specs, d, rng);
    case InjectionKind::discrete_binning: return std::make_unique<DiscreteBinningEncoder>(specs, d, rng);
    case InjectionKind::fourier_feature: return std::make_unique<FourierFeatureEncoder>(specs, d, rng);
  }
  throw std::invalid_argument("unknown injection strategy");
}

ConditionEmbedding embed_vector_strategy(const QualityVector& s, const ConditionEncoder& strategy) {
  if (const auto* gcc = dynamic_cast<const GccEncoder*>(&strategy)) {
    return embed_vector(s, gcc->table(), gcc->specs());
  }
  const Eigen::MatrixXd stacked = strategy.encode(std::span<const QualityVector>(&s, 1));
  ConditionEmbedding e;
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    e[k] = stacked.block(static_cast<Eigen::Index>(k) * strategy.dim(), 0, strategy.dim(), 1);
  }
  return e;
}

}  // namespace lacon
