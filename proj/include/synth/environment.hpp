#pragma once

// The classifier-in-the-loop environment: D/V, the support set S, model M, and
// the accuracy-minus-entropy reward.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synth/classifier.hpp"
#include "synth/dataset.hpp"
#include "synth/generator.hpp"
#include "synth/prompt_space.hpp"

namespace synth {

// Policy input: per-class validation accuracy, mean validation entropy, |S| / N_syn.
struct StateVector {
  std::vector<double> per_class_accuracy;
  double mean_entropy = 0.0;
  double budget_fraction = 0.0;

  std::size_t dimension() const noexcept { return per_class_accuracy.size() + 2; }
  std::vector<double> features() const;

  static StateVector from_report(const EvalReport& report, double budget_fraction);

  bool operator==(const StateVector&) const = default;
};

// reward = (after.acc - before.acc) - (after.entropy - before.entropy)
double compute_reward(const EvalReport& before, const EvalReport& after);

struct SupportRecord {
  std::size_t step = 0;
  Prompt prompt;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::uint64_t flat_index = 0;
  std::string backend_info;
};

// Append-only, capped at `capacity` samples.
class SupportSet {
 public:
  explicit SupportSet(std::size_t capacity = 0) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<LabeledSample>& samples() const noexcept { return samples_; }
  const std::vector<SupportRecord>& records() const noexcept { return records_; }

  // Labels every sample with the first class slot. Throws kInvalidRequest on overflow.
  void append(SupportRecord record, std::vector<std::vector<double>> features);
  void clear();

 private:
  std::size_t capacity_;
  std::vector<LabeledSample> samples_;
  std::vector<SupportRecord> records_;
};

struct EnvConfig {
  std::size_t images_per_step = 10;  // m
  std::size_t budget = 400;          // N_syn
  TrainerConfig pretrain{0.5, 300, 0.0, 0, 0.01};
  TrainerConfig step{0.5, 30, 0.0, 0, 0.01};
  bool warm_start = true;
  std::uint64_t run_seed = 0;

  // Throws kConfig unless counts are positive and budget is a multiple of m.
  void validate() const;
  std::size_t steps_per_episode() const { return budget / images_per_step; }
};

// Read-only state shared by every environment of a run: the data, the config and
// the model pretrained on D alone together with its validation report.
struct EnvironmentContext {
  Dictionary dictionary;
  std::shared_ptr<const DatasetSplits> splits;
  EnvConfig config;
  ClassifierModel pretrained;
  EvalReport pretrained_report;
};

std::shared_ptr<const EnvironmentContext> make_environment_context(
    Dictionary dictionary, std::shared_ptr<const DatasetSplits> splits, EnvConfig config);

struct StepResult {
  StateVector state;
  double reward = 0.0;
  bool done = false;
  EvalReport before;
  EvalReport after;
};

// One per exploration thread; the generator must outlive the environment.
class Environment {
 public:
  Environment(std::shared_ptr<const EnvironmentContext> context, Generator& generator);

  // Empties S and restores the pretrained model and its report as the "before" state.
  StateVector reset();
  StepResult step(const PromptAction& action);

  const EnvironmentContext& context() const noexcept { return *context_; }
  const SupportSet& support_set() const noexcept { return support_; }
  const ClassifierModel& model() const noexcept { return model_; }
  const EvalReport& current_report() const noexcept { return report_; }
  std::size_t steps_taken() const noexcept { return step_; }
  bool done() const noexcept { return support_.size() == support_.capacity(); }

 private:
  std::shared_ptr<const EnvironmentContext> context_;
  Generator* generator_;
  SupportSet support_;
  ClassifierModel model_;
  EvalReport report_;
  std::size_t step_ = 0;
  bool ready_ = false;
};

}  // namespace synth
