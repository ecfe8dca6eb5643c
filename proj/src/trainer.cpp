#include "lacon/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace lacon {

namespace {

constexpr double kDivergenceLoss = 1e6;

}  // namespace

TrainingSet load_training_set(const Manifest& manifest, int side) {
  if (manifest.empty()) throw std::invalid_argument("cannot train on an empty manifest");
  TrainingSet set;
  const auto n = static_cast<Eigen::Index>(manifest.size());
  set.images.resize(static_cast<Eigen::Index>(side) * side, n);
  set.classes.reserve(manifest.size());
  set.scores.reserve(manifest.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const SampleRecord& r = manifest.records[static_cast<std::size_t>(i)];
    const RgbImage img = load_image_ref(r.image_ref);
    if (img.width() != side || img.height() != side) {
      throw std::invalid_argument("image '" + r.id + "' is " + std::to_string(img.width()) + "x" +
                                  std::to_string(img.height()) + ", expected " + std::to_string(side) + "x" +
                                  std::to_string(side));
    }
    set.images.col(i) = image_to_column(img);
    set.classes.push_back(r.class_label);
    set.scores.push_back(r.quality);
  }
  set.medians = attribute_medians(manifest);
  return set;
}

TrainResult train(const TrainingSet& data, const TrainConfig& config, InjectionKind strategy, const AnchorSpecs& specs,
                  const StepCallback& on_step) {
  config.validate();
  validate_specs(specs);
  if (data.size() == 0) throw std::invalid_argument("cannot train on an empty training set");
  if (data.images.rows() != config.net.data_dim() || data.images.cols() != static_cast<Eigen::Index>(data.size()) ||
      data.scores.size() != data.size()) {
    throw std::invalid_argument("training set does not match the network's data dimension");
  }
  for (int c : data.classes) {
    if (c < 0 || c >= config.net.num_classes) {
      throw std::invalid_argument("class label " + std::to_string(c) + " outside [0, " +
                                  std::to_string(config.net.num_classes) + ")");
    }
  }

  VelocityNet net(config.net, strategy, specs, config.seed);
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 1u};
  nn::Rng rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::vector<nn::Param*> params = net.parameters();
  nn::Adam adam(config.adam, params);

  TrainResult result{Checkpoint{config, specs, 0, train_config_digest(config, strategy, specs), data.medians, net}, {}};
  result.loss_curve.reserve(static_cast<std::size_t>(config.steps));

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  FlowBatch batch;
  batch.x.resize(config.net.data_dim(), static_cast<Eigen::Index>(batch_size));
  batch.classes.resize(batch_size);
  batch.scores.resize(batch_size);
  for (int step = 1; step <= config.steps; ++step) {
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t i = pick(rng);
      batch.x.col(static_cast<Eigen::Index>(b)) = data.images.col(static_cast<Eigen::Index>(i));
      batch.classes[b] = data.classes[i];
      batch.scores[b] = data.scores[i];
    }
    double loss = 0.0;
    try {
      loss = fm_loss(net, batch, config.p_drop, rng);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("training aborted at step " + std::to_string(step) + ": " + e.what());
    }
    if (loss > kDivergenceLoss) {
      throw std::runtime_error("training diverged at step " + std::to_string(step) + ": loss " + std::to_string(loss));
    }
    adam.step(params);
    result.loss_curve.push_back({step, loss});
    if (on_step) on_step(step, loss);
  }

  result.checkpoint.step = config.steps;
  result.checkpoint.net = std::move(net);
  return result;
}

TrainResult train(const Manifest& manifest, const TrainConfig& config, InjectionKind strategy,
                  const AnchorSpecs& specs, const StepCallback& on_step) {
  return train(load_training_set(manifest, config.net.side), config, strategy, specs, on_step);
}

std::string loss_curve_csv(std::span<const LossPoint> curve) {
  std::string out = "step,loss\n";
  char line[64];
  for (const LossPoint& p : curve) {
    std::snprintf(line, sizeof line, "%d,%.9g\n", p.step, p.loss);
    out += line;
  }
  return out;
}

}  // namespace lacon
