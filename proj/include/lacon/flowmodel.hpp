#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lacon/image.hpp"
#include "lacon/encoder.hpp"
#include "lacon/nn.hpp"
#include "lacon/quality.hpp"

namespace lacon {

// Class index that selects the learned "no class" embedding.
inline constexpr int kNullClass = -1;

struct NetConfig {
  int side = 16;
  int cond_dim = 8;   // d, width of each attribute embedding
  int class_dim = 8;  // d_y
  std::vector<int> hidden{256, 256, 256};
  int num_classes = 2;
  double data_std = 0.5;  // sigma_d of the preconditioning

  int data_dim() const { return side * side; }
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  int batch_size = 128;
  int steps = 5000;
  nn::AdamConfig adam;
  double p_drop = 0.1;
  NetConfig net;

  void validate() const;
};

// Anything that predicts a velocity for a batch of states. Columns of x_t are
// samples; t, classes and scores carry one entry per column.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int data_dim() const = 0;
  virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& x_t, std::span<const double> t, std::span<const int> classes,
                                  std::span<const QualityVector> scores) const = 0;
};

struct NetCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // hidden pre-activations
  std::vector<Eigen::MatrixXd> post;  // hidden activations
  std::vector<int> class_rows;
  std::vector<double> c_out;
  EncoderCache encoder;
};

// MLP over concat(c_in x_t, [sin 2pi t, cos 2pi t, t], class embedding,
// e_aes..e_luma) with SiLU hidden layers. The velocity is
// c_skip(t) x_t + c_out(t) MLP(...), the variance-preserving preconditioning
// for the path x_t = (1 - t) x + t eps with data std sigma_d.
class VelocityNet final : public VelocityField {
 public:
  VelocityNet(NetConfig config, InjectionKind strategy, const AnchorSpecs& specs, std::uint64_t seed);

  VelocityNet(const VelocityNet& other);
  VelocityNet& operator=(const VelocityNet& other);
  VelocityNet(VelocityNet&&) noexcept = default;
  VelocityNet& operator=(VelocityNet&&) noexcept = default;

  const NetConfig& config() const { return config_; }
  InjectionKind strategy() const { return encoder_->kind(); }
  const ConditionEncoder& encoder() const { return *encoder_; }
  ConditionEncoder& encoder() { return *encoder_; }

  int data_dim() const override { return config_.data_dim(); }
  int input_dim() const;

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_t, std::span<const double> t, std::span<const int> classes,
                          std::span<const QualityVector> scores) const override {
    return forward(x_t, t, classes, scores, nullptr);
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x_t, std::span<const double> t, std::span<const int> classes,
                          std::span<const QualityVector> scores, NetCache* cache) const;

  // Accumulates dL/dparam for every parameter given dL/doutput.
  void backward(const NetCache& cache, const Eigen::MatrixXd& grad_out);

  // Stable order: class table, encoder parameters, then layers.
  std::vector<nn::Param*> parameters();
  std::vector<const nn::Param*> parameters() const;
  void zero_grad();

  nn::Dense& output_layer() { return layers_.back(); }

 private:
  NetConfig config_;
  std::unique_ptr<ConditionEncoder> encoder_;
  nn::Param class_table_;  // (num_classes + 1) x d_y, last row is the null class
  std::vector<nn::Dense> layers_;
};

Eigen::VectorXd time_embedding(double t);

struct Preconditioning {
  double c_in;
  double c_skip;
  double c_out;
};

// With D = t^2 + sigma_d^2 (1 - t)^2: c_in = 1/sqrt(D),
// c_skip = (t - sigma_d^2 (1 - t)) / D, c_out = sigma_d / sqrt(D).
Preconditioning preconditioning(double t, double data_std);

// x_t = (1 - t) x + t eps.
Eigen::MatrixXd interpolate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double t);

struct FlowBatch {
  Eigen::MatrixXd x;  // D x B, intensities mapped to [-1, 1]
  std::vector<int> classes;
  std::vector<QualityVector> scores;

  std::size_t size() const { return classes.size(); }
};

// Per-sample randomness of one loss evaluation.
struct FlowNoise {
  std::vector<double> t;   // uniform on (0, 1)
  Eigen::MatrixXd eps;     // standard normal, D x B
  std::vector<char> drop;  // replace the class with the null class
};

FlowNoise draw_flow_noise(std::size_t batch, int dim, double p_drop, nn::Rng& rng);

// Mean squared error between v(x_t, t, y, s) and eps - x over all entries.
double flow_loss_value(const VelocityField& field, const FlowBatch& batch, const FlowNoise& noise);

// Same loss, with gradients left in the network's parameter grads (previous
// gradients are cleared). Throws std::runtime_error on a non-finite loss.
double fm_loss(VelocityNet& net, const FlowBatch& batch, const FlowNoise& noise);
double fm_loss(VelocityNet& net, const FlowBatch& batch, double p_drop, nn::Rng& rng);

// Converts [0,1] RGB to the model's [-1,1] grayscale column.
Eigen::VectorXd image_to_column(const RgbImage& image);

}  // namespace lacon
