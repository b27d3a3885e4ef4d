#pragma once

// Multinomial linear-softmax classifier M, its predictive entropy and evaluation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "synth/dataset.hpp"

namespace synth {

struct ClassifierModel {
  std::size_t n_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<double> weights;  // n_classes x feature_dim, row-major
  std::vector<double> bias;

  ClassifierModel() = default;
  ClassifierModel(std::size_t classes, std::size_t dim)
      : n_classes(classes), feature_dim(dim), weights(classes * dim, 0.0), bias(classes, 0.0) {}

  void logits(std::span<const double> x, std::span<double> out) const;
  std::vector<double> probabilities(std::span<const double> x) const;

  bool operator==(const ClassifierModel&) const = default;
};

// -sum p log p (natural log, 0 log 0 = 0). Throws kNumerical on non-finite input.
double entropy_of(std::span<const double> probs);
double predictive_entropy(const ClassifierModel& model, std::span<const double> x);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_count;
  std::vector<bool> empty_class;  // label absent from the split; accuracy recorded as 0
  double mean_entropy = 0.0;
  std::size_t n_eval = 0;
};

// Argmax ties go to the lowest class index.
EvalReport evaluate(const ClassifierModel& model, std::span<const LabeledSample> split);

struct TrainerConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 30;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
};

// Data is passed as a list of parts (e.g. D and S) so callers need not concatenate.
using TrainingParts = std::span<const std::span<const LabeledSample>>;

// Full-batch gradient descent on mean cross-entropy. Bit-deterministic for fixed inputs.
// A fresh model is seeded-normal initialized; `warm_start` continues from given parameters.
ClassifierModel train_model(TrainingParts parts, std::size_t n_classes, std::size_t feature_dim,
                            const TrainerConfig& config,
                            const std::optional<ClassifierModel>& warm_start = std::nullopt);

ClassifierModel train_model(std::span<const LabeledSample> data, std::size_t n_classes,
                            std::size_t feature_dim, const TrainerConfig& config,
                            const std::optional<ClassifierModel>& warm_start = std::nullopt);

}  // namespace synth
