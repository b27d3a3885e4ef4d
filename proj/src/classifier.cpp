#include "synth/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "synth/error.hpp"
#include "synth/rng.hpp"

namespace synth {

void ClassifierModel::logits(std::span<const double> x, std::span<double> out) const {
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double* row = &weights[c * feature_dim];
    double z = bias[c];
    for (std::size_t j = 0; j < feature_dim; ++j) z += row[j] * x[j];
    out[c] = z;
  }
}

namespace {

void softmax_inplace(std::span<double> z) {
  const double max_z = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - max_z);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

std::vector<double> ClassifierModel::probabilities(std::span<const double> x) const {
  if (x.size() != feature_dim) {
    throw Error(ErrorKind::kInvalidInput, "classifier expects dimension " + std::to_string(feature_dim) +
                                              ", got " + std::to_string(x.size()));
  }
  std::vector<double> p(n_classes);
  logits(x, p);
  softmax_inplace(p);
  return p;
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw Error(ErrorKind::kNumerical, "entropy: non-finite probability");
    if (p > 0.0) h -= p * std::log(p);
  }
  // Rounding can push a one-hot entropy a hair below zero.
  return std::max(h, 0.0);
}

double predictive_entropy(const ClassifierModel& model, std::span<const double> x) {
  return entropy_of(model.probabilities(x));
}

EvalReport evaluate(const ClassifierModel& model, std::span<const LabeledSample> split) {
  if (split.empty()) throw Error(ErrorKind::kInvalidInput, "evaluate: empty split");
  validate_samples(split, model.n_classes, model.feature_dim);

  EvalReport report;
  report.n_eval = split.size();
  report.per_class_accuracy.assign(model.n_classes, 0.0);
  report.per_class_count.assign(model.n_classes, 0);
  report.empty_class.assign(model.n_classes, false);

  std::vector<std::size_t> correct_by_class(model.n_classes, 0);
  std::vector<double> p(model.n_classes);
  std::size_t correct = 0;
  double entropy_sum = 0.0;
  for (const auto& s : split) {
    model.logits(s.features, p);
    const std::size_t predicted = argmax_lowest(p);
    softmax_inplace(p);
    entropy_sum += entropy_of(p);
    ++report.per_class_count[s.label];
    if (predicted == s.label) {
      ++correct;
      ++correct_by_class[s.label];
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
  report.mean_entropy = entropy_sum / static_cast<double>(split.size());
  for (std::size_t c = 0; c < model.n_classes; ++c) {
    if (report.per_class_count[c] == 0) {
      report.empty_class[c] = true;
    } else {
      report.per_class_accuracy[c] =
          static_cast<double>(correct_by_class[c]) / static_cast<double>(report.per_class_count[c]);
    }
  }
  return report;
}

ClassifierModel train_model(TrainingParts parts, std::size_t n_classes, std::size_t feature_dim,
                            const TrainerConfig& config, const std::optional<ClassifierModel>& warm_start) {
  std::size_t total = 0;
  for (const auto& part : parts) {
    validate_samples(part, n_classes, feature_dim);
    total += part.size();
  }
  if (total == 0) throw Error(ErrorKind::kInvalidInput, "train_model: no training data");

  ClassifierModel model;
  if (warm_start) {
    if (warm_start->n_classes != n_classes || warm_start->feature_dim != feature_dim) {
      throw Error(ErrorKind::kInvalidInput, "train_model: warm-start model has the wrong shape");
    }
    model = *warm_start;
  } else {
    model = ClassifierModel(n_classes, feature_dim);
    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, config.init_scale);
    for (double& w : model.weights) w = normal(rng);
  }

  const double inv_n = 1.0 / static_cast<double>(total);
  std::vector<double> grad_w(model.weights.size());
  std::vector<double> grad_b(model.bias.size());
  std::vector<double> p(n_classes);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (const auto& part : parts) {
      for (const auto& s : part) {
        model.logits(s.features, p);
        softmax_inplace(p);
        p[s.label] -= 1.0;
        const double* x = s.features.data();
        for (std::size_t c = 0; c < n_classes; ++c) {
          const double g = p[c];
          grad_b[c] += g;
          double* row = &grad_w[c * feature_dim];
          for (std::size_t j = 0; j < feature_dim; ++j) row[j] += g * x[j];
        }
      }
    }
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      model.weights[i] -= config.learning_rate * (grad_w[i] * inv_n + config.l2 * model.weights[i]);
    }
    for (std::size_t c = 0; c < n_classes; ++c) model.bias[c] -= config.learning_rate * grad_b[c] * inv_n;
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw Error(ErrorKind::kNumerical, "train_model: parameters diverged");
  }
  return model;
}

ClassifierModel train_model(std::span<const LabeledSample> data, std::size_t n_classes,
                            std::size_t feature_dim, const TrainerConfig& config,
                            const std::optional<ClassifierModel>& warm_start) {
  const std::span<const LabeledSample> parts[] = {data};
  return train_model(parts, n_classes, feature_dim, config, warm_start);
}

}  // namespace synth
