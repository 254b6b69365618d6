#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "berncert/attacks.hpp"
#include "berncert/datasets.hpp"
#include "berncert/model.hpp"

namespace berncert {

/// Layer widths of a classifier: input -> feature_hidden... -> d (sigmoid)
/// -> head_hidden... -> K.
struct ModelSpec {
  int input_dim = 2;
  std::vector<int> feature_hidden{16, 16};
  int feature_dim = 2;
  std::vector<int> head_hidden{16};
  int num_classes = 2;
};

struct AdversarialConfig {
  int steps = 20;
  double epsilon = 0.1;
  double step_size = 0.0125;
  NormOrder norm = NormOrder::l2();
};

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 0.03;
  int batch_size = 32;
  int power_iters_train = 1;
  int power_iters_freeze = 1000;
  std::optional<AdversarialConfig> adversarial;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Fan-in scaled uniform weights, zero biases; feature extractor normalized.
MlpModel init_model(const ModelSpec& spec, std::uint64_t seed);

/// Minibatch Adam on softmax cross-entropy. Feature-extractor weights are
/// renormalized to unit spectral norm after every step and frozen with
/// `power_iters_freeze` rounds at the end.
TrainResult train_toy(const LabeledData& data, const ModelSpec& spec, const TrainConfig& cfg,
                      std::uint64_t seed);

double accuracy(const MlpModel& model, const LabeledData& data);

/// Scalar regressor 1 -> hidden... -> 1 with no feature extractor, fit by plain SGD on
/// squared error.
MlpModel train_regressor(const RegressionData& data, const std::vector<int>& hidden,
                         const TrainConfig& cfg, std::uint64_t seed);

}  // namespace berncert
