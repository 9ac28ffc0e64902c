#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cropspec/types.hpp"

namespace cropspec {

// Rectifier network configuration. One or two hidden layers; dropout after
// each hidden activation during training only.
struct MLPConfig {
  std::vector<int> hidden_layers{256};
  double dropout_rate = 0.05;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 2024;
};

// Throws UsageError on invalid settings (no hidden layers, more than two,
// width < 1, epochs < 1, non-positive learning rate, dropout outside [0, 1)).
void validate(const MLPConfig& cfg);

// Dense rectifier network with a 5-way linear output head, plus the per-band
// standardization statistics frozen from the training data.
struct MLPModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps in -> out, stored out x in
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;  // floored at 1e-8
  WavelengthGrid grid;
  std::vector<double> epoch_losses;  // mean training cross-entropy per epoch; not serialized

  int bands() const { return grid.bands(); }
};

// Mini-batch SGD with momentum on softmax cross-entropy over crop labels.
// Inputs are z-scored with training statistics; inverted dropout draws a
// fresh mask per batch from the seeded generator. Deterministic given seed.
MLPModel train_mlp(const Dataset& ds, const MLPConfig& cfg);

struct MLPPrediction {
  CropLabel crop;
  Eigen::Matrix<double, kNumCrops, 1> probabilities;
};

// Dropout-free forward pass; softmax probabilities sum to 1, argmax ties go
// to the first crop alphabetically.
MLPPrediction predict_mlp(const MLPModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

// Compares analytic backpropagation gradients against central finite
// differences (step 1e-5) over every parameter, dropout disabled. The check
// network gets a small bias offset so no pre-activation sits exactly on the
// rectifier kink, where finite differences are undefined. Returns the worst
// discrepancy |analytic - numeric| / max(1, |analytic|, |numeric|).
double gradient_check(const MLPConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                      const std::vector<CropLabel>& labels);

}  // namespace cropspec
