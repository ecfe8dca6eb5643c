#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace lacon::nn {

using Rng = std::mt19937_64;

// A named trainable tensor with its accumulated gradient.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Param() = default;
  Param(std::string n, Eigen::MatrixXd v) : name(std::move(n)), value(std::move(v)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);

// Fully connected layer y = W x + b over column batches.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, int in, int out, Rng& rng);

  int in_dim() const { return static_cast<int>(weight_.value.cols()); }
  int out_dim() const { return static_cast<int>(weight_.value.rows()); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  // Accumulates parameter gradients and returns dL/dx.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_out);

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  const Param& weight() const { return weight_; }
  const Param& bias() const { return bias_; }

 private:
  Param weight_;
  Param bias_;
};

Eigen::MatrixXd silu(const Eigen::MatrixXd& h);
// dL/dh given pre-activation h and dL/d silu(h).
Eigen::MatrixXd silu_backward(const Eigen::MatrixXd& h, const Eigen::MatrixXd& grad_out);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments and no weight decay. The parameter list
// must keep the same order for the optimizer's lifetime.
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<Param*>& params);
  void step(const std::vector<Param*>& params);
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  long t_ = 0;
};

}  // namespace lacon::nn
