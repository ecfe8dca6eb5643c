#include "lacon/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace lacon {

namespace {

std::vector<QualityVector> repeat(const QualityVector& s, std::size_t n) { return std::vector<QualityVector>(n, s); }

std::vector<double> repeat(double t, std::size_t n) { return std::vector<double>(n, t); }

std::vector<int> null_classes(std::size_t n) { return std::vector<int>(n, kNullClass); }

// a + w (b - a), written as (1 - w) a + w b so that w = 1 returns b and w = 0
// returns a bit for bit.
Eigen::MatrixXd guide(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double w) {
  return (1.0 - w) * a + w * b;
}

template <typename Velocity>
Eigen::MatrixXd integrate(const VelocityField& net, std::span<const int> classes, const SamplerConfig& cfg,
                          Velocity&& velocity) {
  cfg.validate();
  if (classes.size() != static_cast<std::size_t>(cfg.count)) {
    throw std::invalid_argument("sampler needs one class label per output (" + std::to_string(cfg.count) + "), got " +
                                std::to_string(classes.size()));
  }
  Eigen::MatrixXd x = initial_noise(net.data_dim(), cfg.count, cfg.seed);
  const double dt = 1.0 / cfg.steps;
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = static_cast<double>(cfg.steps - i) / cfg.steps;
    x -= dt * velocity(x, t);
    if (!x.allFinite()) {
      throw std::runtime_error("sampler state became non-finite at step " + std::to_string(i + 1) + " (t = " +
                               std::to_string(t) + ")");
    }
  }
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace

std::string_view mode_name(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::cfg: return "cfg";
    case GuidanceMode::lacon_s: return "lacon-s";
    case GuidanceMode::lacon_a: return "lacon-a";
  }
  throw std::invalid_argument("unknown guidance mode");
}

GuidanceMode parse_mode(std::string_view name) {
  for (GuidanceMode m : {GuidanceMode::cfg, GuidanceMode::lacon_s, GuidanceMode::lacon_a}) {
    if (name == mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown sampling mode '" + std::string(name) + "' (expected cfg, lacon-s or lacon-a)");
}

QualityVector default_high_quality_targets() { return {7.0, 0.05, 2500.0, 7.0, 0.5}; }

GuidanceSpec GuidanceSpec::with_targets(double omega_c, const std::array<double, kNumAttributes>& omega,
                                        const QualityVector& s_base, const QualityVector& targets) {
  GuidanceSpec g;
  g.omega_c = omega_c;
  g.omega = omega;
  g.s_base = s_base;
  for (Attribute a : kAllAttributes) {
    g.s_target[index_of(a)] = s_base;
    g.s_target[index_of(a)][a] = targets[a];
  }
  return g;
}

void GuidanceSpec::validate() const {
  if (!std::isfinite(omega_c)) throw std::invalid_argument("omega_c must be finite");
  for (double w : omega) {
    if (!std::isfinite(w)) throw std::invalid_argument("attribute guidance scales must be finite");
  }
  if (!within_declared_ranges(s_base)) throw std::invalid_argument("s_base lies outside the declared ranges");
  for (const QualityVector& s : s_target) {
    if (!within_declared_ranges(s)) throw std::invalid_argument("a guidance target lies outside the declared ranges");
  }
}

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("sampler needs at least one step");
  if (count < 1) throw std::invalid_argument("sample count must be positive");
}

Eigen::MatrixXd initial_noise(int dim, int count, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(dim, count);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(rng);
  }
  return x;
}

Eigen::MatrixXd cfg_velocity(const VelocityField& net, const Eigen::MatrixXd& x_t, double t, std::span<const int> classes,
                             const QualityVector& s, double omega_c) {
  const auto n = static_cast<std::size_t>(x_t.cols());
  const std::vector<double> ts = repeat(t, n);
  const std::vector<QualityVector> ss = repeat(s, n);
  const Eigen::MatrixXd v_uncond = net.predict(x_t, ts, null_classes(n), ss);
  const Eigen::MatrixXd v_cond = net.predict(x_t, ts, classes, ss);
  return guide(v_uncond, v_cond, omega_c);
}

Eigen::MatrixXd lacon_a_velocity(const VelocityField& net, const Eigen::MatrixXd& x_t, double t,
                                 std::span<const int> classes, const GuidanceSpec& g) {
  const auto n = static_cast<std::size_t>(x_t.cols());
  const std::vector<double> ts = repeat(t, n);
  const std::vector<QualityVector> base = repeat(g.s_base, n);
  const Eigen::MatrixXd v_base = net.predict(x_t, ts, null_classes(n), base);
  const Eigen::MatrixXd v_text = net.predict(x_t, ts, classes, base);
  Eigen::MatrixXd v = guide(v_base, v_text, g.omega_c);
  for (Attribute a : kAllAttributes) {
    const Eigen::MatrixXd v_k = net.predict(x_t, ts, classes, repeat(g.s_target[index_of(a)], n));
    v += g.omega[index_of(a)] * (v_k - v_text);
  }
  return v;
}

Eigen::MatrixXd euler_sample(const VelocityField& net, std::span<const int> classes, const QualityVector& s,
                             const SamplerConfig& cfg, double omega_c) {
  if (!std::isfinite(omega_c)) throw std::invalid_argument("omega_c must be finite");
  return integrate(net, classes, cfg,
                   [&](const Eigen::MatrixXd& x, double t) { return cfg_velocity(net, x, t, classes, s, omega_c); });
}

Eigen::MatrixXd lacon_a_sample(const VelocityField& net, std::span<const int> classes, const GuidanceSpec& g,
                               const SamplerConfig& cfg) {
  g.validate();
  return integrate(net, classes, cfg,
                   [&](const Eigen::MatrixXd& x, double t) { return lacon_a_velocity(net, x, t, classes, g); });
}

Eigen::MatrixXd sample(const VelocityField& net, std::span<const int> classes, const GuidanceSpec& g,
                       const QualityVector& lacon_s_target, const SamplerConfig& cfg) {
  switch (cfg.mode) {
    case GuidanceMode::cfg: return euler_sample(net, classes, g.s_base, cfg, g.omega_c);
    case GuidanceMode::lacon_s: return euler_sample(net, classes, lacon_s_target, cfg, g.omega_c);
    case GuidanceMode::lacon_a: return lacon_a_sample(net, classes, g, cfg);
  }
  throw std::invalid_argument("unknown guidance mode");
}

RgbImage column_to_image(const Eigen::Ref<const Eigen::VectorXd>& column, int side) {
  if (column.size() != static_cast<Eigen::Index>(side) * side) {
    throw std::invalid_argument("sample column does not match a " + std::to_string(side) + "x" +
                                std::to_string(side) + " image");
  }
  std::vector<double> gray(static_cast<std::size_t>(column.size()));
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    gray[static_cast<std::size_t>(i)] = std::clamp(0.5 * (column(i) + 1.0), 0.0, 1.0);
  }
  return gray_to_rgb(side, side, gray);
}

std::vector<QualityVector> measure_outputs(const Eigen::MatrixXd& samples, int side, const LabelConfig& config) {
  std::vector<QualityVector> out;
  out.reserve(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    out.push_back(label_sample(column_to_image(samples.col(j), side), config, "sample-" + std::to_string(j)));
  }
  return out;
}

double SweepResult::mean() const {
  if (measured.empty()) return 0.0;
  double sum = 0.0;
  for (const QualityVector& q : measured) sum += q[attribute];
  return sum / static_cast<double>(measured.size());
}

double SweepResult::stddev() const {
  if (measured.empty()) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (const QualityVector& q : measured) ss += (q[attribute] - m) * (q[attribute] - m);
  return std::sqrt(ss / static_cast<double>(measured.size()));
}

SweepResult sweep_setting(const VelocityField& net, int num_classes, int side, const QualityVector& s_base,
                          Attribute attribute, double target, const SamplerConfig& cfg, double omega_c,
                          double omega_attr, const LabelConfig& label) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  std::vector<int> classes(static_cast<std::size_t>(std::max(cfg.count, 0)));
  for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i % static_cast<std::size_t>(num_classes));

  QualityVector moved = s_base;
  moved[attribute] = target;
  std::array<double, kNumAttributes> omega{};
  omega[index_of(attribute)] = omega_attr;
  const GuidanceSpec g = GuidanceSpec::with_targets(omega_c, omega, s_base, moved);

  SweepResult r;
  r.attribute = attribute;
  r.target = target;
  r.mode = cfg.mode;
  r.omega_c = omega_c;
  r.measured = measure_outputs(sample(net, classes, g, moved, cfg), side, label);
  return r;
}

}  // namespace lacon
