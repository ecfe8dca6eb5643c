#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lacon/checkpoint.hpp"
#include "lacon/curation.hpp"
#include "lacon/flowmodel.hpp"

namespace lacon {

struct LossPoint {
  int step;
  double loss;
};

// Grayscale training images in [-1, 1], one column per manifest record.
struct TrainingSet {
  Eigen::MatrixXd images;
  std::vector<int> classes;
  std::vector<QualityVector> scores;
  QualityVector medians;

  std::size_t size() const { return classes.size(); }
};

// Loads every referenced image. Throws if the manifest is empty, an image
// cannot be loaded or does not have the configured side.
TrainingSet load_training_set(const Manifest& manifest, int side);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossPoint> loss_curve;
};

using StepCallback = std::function<void(int step, double loss)>;

// Adam over uniformly sampled batches; a pure function of (data, config,
// strategy, specs). Aborts with std::runtime_error when the loss is not finite
// or exceeds 1e6.
TrainResult train(const TrainingSet& data, const TrainConfig& config, InjectionKind strategy, const AnchorSpecs& specs,
                  const StepCallback& on_step = {});
TrainResult train(const Manifest& manifest, const TrainConfig& config, InjectionKind strategy,
                  const AnchorSpecs& specs, const StepCallback& on_step = {});

// "step,loss" header plus one row per step.
std::string loss_curve_csv(std::span<const LossPoint> curve);

}  // namespace lacon
