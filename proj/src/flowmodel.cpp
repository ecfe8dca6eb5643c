#include "lacon/flowmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lacon {

void NetConfig::validate() const {
  if (side < 1) throw std::invalid_argument("net side must be positive");
  if (cond_dim < 1 || class_dim < 1) throw std::invalid_argument("embedding widths must be positive");
  if (hidden.empty()) throw std::invalid_argument("at least one hidden layer is required");
  for (int w : hidden) {
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  if (!(data_std > 0.0) || !std::isfinite(data_std)) throw std::invalid_argument("data_std must be positive");
}

void TrainConfig::validate() const {
  net.validate();
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (steps < 0) throw std::invalid_argument("step count must be non-negative");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw std::invalid_argument("p_drop must lie in [0, 1)");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
}

VelocityNet::VelocityNet(NetConfig config, InjectionKind strategy, const AnchorSpecs& specs, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  nn::Rng rng(seed);
  encoder_ = make_encoder(strategy, specs, config_.cond_dim, rng);
  class_table_ = nn::Param("class_table", nn::uniform_matrix(config_.num_classes + 1, config_.class_dim,
                                                             1.0 / std::sqrt(static_cast<double>(config_.class_dim)), rng));
  int in = input_dim();
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
    layers_.emplace_back("mlp." + std::to_string(i), in, config_.hidden[i], rng);
    in = config_.hidden[i];
  }
  layers_.emplace_back("mlp." + std::to_string(config_.hidden.size()), in, data_dim(), rng);
}

VelocityNet::VelocityNet(const VelocityNet& other)
    : config_(other.config_), encoder_(other.encoder_->clone()), class_table_(other.class_table_), layers_(other.layers_) {}

VelocityNet& VelocityNet::operator=(const VelocityNet& other) {
  if (this != &other) {
    config_ = other.config_;
    encoder_ = other.encoder_->clone();
    class_table_ = other.class_table_;
    layers_ = other.layers_;
  }
  return *this;
}

int VelocityNet::input_dim() const {
  return data_dim() + 3 + config_.class_dim + static_cast<int>(kNumAttributes) * config_.cond_dim;
}

Eigen::MatrixXd VelocityNet::forward(const Eigen::MatrixXd& x_t, std::span<const double> t, std::span<const int> classes,
                                     std::span<const QualityVector> scores, NetCache* cache) const {
  const Eigen::Index batch = x_t.cols();
  const auto n = static_cast<std::size_t>(batch);
  if (x_t.rows() != data_dim() || t.size() != n || classes.size() != n || scores.size() != n) {
    throw std::invalid_argument("velocity net input dimensions do not match");
  }
  const int d = data_dim();
  const int dy = config_.class_dim;

  Eigen::MatrixXd input(input_dim(), batch);
  std::vector<int> rows(n);
  std::vector<Preconditioning> pre(n);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto i = static_cast<std::size_t>(b);
    pre[i] = preconditioning(t[i], config_.data_std);
    input.block(0, b, d, 1) = pre[i].c_in * x_t.col(b);
    input.block(d, b, 3, 1) = time_embedding(t[i]);
    const int c = classes[i];
    if (c != kNullClass && (c < 0 || c >= config_.num_classes)) {
      throw std::invalid_argument("class label " + std::to_string(c) + " outside [0, " +
                                  std::to_string(config_.num_classes) + ")");
    }
    rows[i] = c == kNullClass ? config_.num_classes : c;
    input.block(d + 3, b, dy, 1) = class_table_.value.row(rows[i]).transpose();
  }
  input.bottomRows(encoder_->output_dim()) = encoder_->encode(scores, cache ? &cache->encoder : nullptr);

  if (cache) {
    cache->pre.clear();
    cache->post.clear();
    cache->class_rows = rows;
    cache->c_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) cache->c_out[i] = pre[i].c_out;
  }
  Eigen::MatrixXd h = input;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    Eigen::MatrixXd pre = layers_[i].forward(h);
    h = nn::silu(pre);
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->post.push_back(h);
    }
  }
  Eigen::MatrixXd out = layers_.back().forward(h);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Preconditioning& c = pre[static_cast<std::size_t>(b)];
    out.col(b) = c.c_skip * x_t.col(b) + c.c_out * out.col(b);
  }
  if (cache) cache->input = std::move(input);
  return out;
}

void VelocityNet::backward(const NetCache& cache, const Eigen::MatrixXd& grad_out) {
  const std::size_t hidden = layers_.size() - 1;
  if (cache.pre.size() != hidden || cache.c_out.size() != static_cast<std::size_t>(grad_out.cols())) {
    throw std::invalid_argument("backward called without a matching training forward pass");
  }
  Eigen::MatrixXd g = grad_out;
  for (Eigen::Index b = 0; b < g.cols(); ++b) g.col(b) *= cache.c_out[static_cast<std::size_t>(b)];
  g = layers_.back().backward(hidden > 0 ? cache.post.back() : cache.input, g);
  for (std::size_t i = hidden; i-- > 0;) {
    g = nn::silu_backward(cache.pre[i], g);
    g = layers_[i].backward(i == 0 ? cache.input : cache.post[i - 1], g);
  }

  const int d = data_dim();
  const int dy = config_.class_dim;
  for (Eigen::Index b = 0; b < g.cols(); ++b) {
    class_table_.grad.row(cache.class_rows[static_cast<std::size_t>(b)]) += g.block(d + 3, b, dy, 1).transpose();
  }
  encoder_->backward(cache.encoder, g.bottomRows(encoder_->output_dim()));
}

std::vector<nn::Param*> VelocityNet::parameters() {
  std::vector<nn::Param*> out{&class_table_};
  for (nn::Param* p : encoder_->parameters()) out.push_back(p);
  for (nn::Dense& layer : layers_) {
    out.push_back(&layer.weight());
    out.push_back(&layer.bias());
  }
  return out;
}

std::vector<const nn::Param*> VelocityNet::parameters() const {
  auto params = const_cast<VelocityNet*>(this)->parameters();
  return {params.begin(), params.end()};
}

void VelocityNet::zero_grad() {
  for (nn::Param* p : parameters()) p->zero_grad();
}

Eigen::VectorXd time_embedding(double t) {
  Eigen::VectorXd e(3);
  e << std::sin(2.0 * std::numbers::pi * t), std::cos(2.0 * std::numbers::pi * t), t;
  return e;
}

Preconditioning preconditioning(double t, double data_std) {
  const double s2 = data_std * data_std;
  const double d = t * t + s2 * (1.0 - t) * (1.0 - t);
  const double root = std::sqrt(d);
  return {1.0 / root, (t - s2 * (1.0 - t)) / d, data_std / root};
}

Eigen::MatrixXd interpolate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double t) {
  if (x.rows() != eps.rows() || x.cols() != eps.cols()) {
    throw std::invalid_argument("interpolate: data and noise dimensions differ");
  }
  return (1.0 - t) * x + t * eps;
}

FlowNoise draw_flow_noise(std::size_t batch, int dim, double p_drop, nn::Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  FlowNoise noise;
  noise.t.resize(batch);
  noise.drop.resize(batch);
  noise.eps.resize(dim, static_cast<Eigen::Index>(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    double t = 0.0;
    while (t == 0.0) t = unit(rng);
    noise.t[b] = t;
    noise.drop[b] = unit(rng) < p_drop ? 1 : 0;
    for (int i = 0; i < dim; ++i) noise.eps(i, static_cast<Eigen::Index>(b)) = normal(rng);
  }
  return noise;
}

namespace {

struct LossInputs {
  Eigen::MatrixXd x_t;
  Eigen::MatrixXd target;
  std::vector<int> classes;
};

LossInputs prepare_loss(const FlowBatch& batch, const FlowNoise& noise, int dim) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("flow-matching batch is empty");
  if (batch.x.rows() != dim || batch.x.cols() != static_cast<Eigen::Index>(n) || batch.scores.size() != n ||
      noise.t.size() != n || noise.drop.size() != n || noise.eps.rows() != dim ||
      noise.eps.cols() != static_cast<Eigen::Index>(n)) {
    throw std::invalid_argument("flow-matching batch and noise shapes do not match");
  }
  LossInputs in;
  in.x_t.resize(dim, static_cast<Eigen::Index>(n));
  in.classes.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    in.x_t.col(col) = interpolate(batch.x.col(col), noise.eps.col(col), noise.t[b]);
    in.classes[b] = noise.drop[b] ? kNullClass : batch.classes[b];
  }
  in.target = noise.eps - batch.x;
  return in;
}

}  // namespace

double flow_loss_value(const VelocityField& field, const FlowBatch& batch, const FlowNoise& noise) {
  const LossInputs in = prepare_loss(batch, noise, field.data_dim());
  const Eigen::MatrixXd out = field.predict(in.x_t, noise.t, in.classes, batch.scores);
  return (out - in.target).squaredNorm() / static_cast<double>(in.target.size());
}

double fm_loss(VelocityNet& net, const FlowBatch& batch, const FlowNoise& noise) {
  const LossInputs in = prepare_loss(batch, noise, net.data_dim());
  net.zero_grad();
  NetCache cache;
  const Eigen::MatrixXd out = net.forward(in.x_t, noise.t, in.classes, batch.scores, &cache);
  const Eigen::MatrixXd diff = out - in.target;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (!std::isfinite(loss)) throw std::runtime_error("flow-matching loss is not finite");
  net.backward(cache, (2.0 / count) * diff);
  return loss;
}

double fm_loss(VelocityNet& net, const FlowBatch& batch, double p_drop, nn::Rng& rng) {
  return fm_loss(net, batch, draw_flow_noise(batch.size(), net.data_dim(), p_drop, rng));
}

Eigen::VectorXd image_to_column(const RgbImage& image) {
  Eigen::VectorXd col(static_cast<Eigen::Index>(image.size()));
  Eigen::Index i = 0;
  for (const Rgb& p : image.pixels()) {
    const double gray = std::clamp(0.299 * p.r + 0.587 * p.g + 0.114 * p.b, 0.0, 1.0);
    col(i++) = 2.0 * gray - 1.0;
  }
  return col;
}

}  // namespace lacon
