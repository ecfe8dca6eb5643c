#include "lacon/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace lacon::nn {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

Dense::Dense(std::string name, int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = Param(name + ".weight", uniform_matrix(out, in, bound, rng));
  bias_ = Param(name + ".bias", uniform_matrix(out, 1, bound, rng));
}

Eigen::MatrixXd Dense::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y = weight_.value * x;
  y.colwise() += bias_.value.col(0);
  return y;
}

Eigen::MatrixXd Dense::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_out) {
  weight_.grad.noalias() += grad_out * x.transpose();
  bias_.grad.col(0) += grad_out.rowwise().sum();
  return weight_.value.transpose() * grad_out;
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& h) {
  return h.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd silu_backward(const Eigen::MatrixXd& h, const Eigen::MatrixXd& grad_out) {
  return h.binaryExpr(grad_out, [](double v, double g) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return g * s * (1.0 + v * (1.0 - s));
  });
}

Adam::Adam(AdamConfig config, const std::vector<Param*>& params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Param* p : params) {
    m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(const std::vector<Param*>& params) {
  if (params.size() != m_.size()) throw std::logic_error("Adam: parameter list changed size");
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m_[i].array() / correction1) / ((v_[i].array() / correction2).sqrt() + eps);
  }
}

}  // namespace lacon::nn
