#include "synth/environment.hpp"

#include <cmath>
#include <utility>

#include "synth/error.hpp"

namespace synth {

std::vector<double> StateVector::features() const {
  std::vector<double> out(per_class_accuracy);
  out.push_back(mean_entropy);
  out.push_back(budget_fraction);
  return out;
}

StateVector StateVector::from_report(const EvalReport& report, double budget_fraction) {
  return StateVector{report.per_class_accuracy, report.mean_entropy, budget_fraction};
}

double compute_reward(const EvalReport& before, const EvalReport& after) {
  if (before.n_eval != after.n_eval) {
    throw Error(ErrorKind::kInvalidInput, "compute_reward: reports come from different splits (n_eval " +
                                              std::to_string(before.n_eval) + " vs " +
                                              std::to_string(after.n_eval) + ")");
  }
  return (after.accuracy - before.accuracy) - (after.mean_entropy - before.mean_entropy);
}

void SupportSet::append(SupportRecord record, std::vector<std::vector<double>> features) {
  if (samples_.size() + features.size() > capacity_) {
    throw Error(ErrorKind::kInvalidRequest, "support set overflow: " + std::to_string(samples_.size()) +
                                                " + " + std::to_string(features.size()) + " > " +
                                                std::to_string(capacity_));
  }
  const std::size_t prompt_id = records_.size();
  const std::size_t label = record.prompt.action.classes[0];
  record.count = features.size();
  for (auto& x : features) {
    samples_.push_back(LabeledSample{std::move(x), label, Provenance::kSynthetic, prompt_id});
  }
  records_.push_back(std::move(record));
}

void SupportSet::clear() {
  samples_.clear();
  records_.clear();
}

void EnvConfig::validate() const {
  if (images_per_step == 0) throw Error(ErrorKind::kConfig, "images per step (m) must be positive");
  if (budget == 0) throw Error(ErrorKind::kConfig, "budget N_syn must be positive");
  if (budget % images_per_step != 0) {
    throw Error(ErrorKind::kConfig, "N_syn (" + std::to_string(budget) + ") must be a multiple of m (" +
                                        std::to_string(images_per_step) + ")");
  }
}

std::shared_ptr<const EnvironmentContext> make_environment_context(
    Dictionary dictionary, std::shared_ptr<const DatasetSplits> splits, EnvConfig config) {
  config.validate();
  if (!splits) throw Error(ErrorKind::kInvalidInput, "environment: no dataset");
  if (splits->n_classes() != dictionary.class_count()) {
    throw Error(ErrorKind::kConfig, "dataset has " + std::to_string(splits->n_classes()) +
                                        " classes but the dictionary lists " +
                                        std::to_string(dictionary.class_count()));
  }
  if (splits->train().empty() || splits->val().empty()) {
    throw Error(ErrorKind::kInvalidInput, "environment: train and validation splits must be non-empty");
  }
  auto pretrained = train_model(splits->train(), splits->n_classes(), splits->feature_dim(), config.pretrain);
  auto report = evaluate(pretrained, splits->val());
  return std::make_shared<const EnvironmentContext>(EnvironmentContext{
      std::move(dictionary), std::move(splits), config, std::move(pretrained), std::move(report)});
}

Environment::Environment(std::shared_ptr<const EnvironmentContext> context, Generator& generator)
    : context_(std::move(context)), generator_(&generator), support_(context_->config.budget) {}

StateVector Environment::reset() {
  support_.clear();
  model_ = context_->pretrained;
  report_ = context_->pretrained_report;
  step_ = 0;
  ready_ = true;
  return StateVector::from_report(report_, 0.0);
}

StepResult Environment::step(const PromptAction& action) {
  if (!ready_) throw Error(ErrorKind::kInvalidRequest, "environment step before reset");
  const auto& cfg = context_->config;
  if (support_.size() + cfg.images_per_step > cfg.budget) {
    throw Error(ErrorKind::kInvalidRequest, "step would exceed the synthetic budget N_syn = " +
                                                std::to_string(cfg.budget));
  }
  const auto& splits = *context_->splits;
  const Prompt prompt = format_prompt(context_->dictionary, action);
  const std::uint64_t flat = action_index(context_->dictionary, action);

  GeneratorRequest request{prompt, cfg.images_per_step, request_seed(cfg.run_seed, step_, flat),
                           splits.feature_dim()};
  GeneratorBatch batch = generator_->generate(request);
  if (batch.samples.size() != request.count) {
    throw Error(ErrorKind::kProtocol, "generator returned " + std::to_string(batch.samples.size()) +
                                          " samples for count " + std::to_string(request.count));
  }
  for (const auto& x : batch.samples) {
    if (x.size() != request.feature_dim) throw Error(ErrorKind::kProtocol, "generator returned wrong dimension");
  }
  support_.append(SupportRecord{step_, prompt, request.count, request.seed, flat, batch.backend_info},
                  std::move(batch.samples));

  const std::span<const LabeledSample> parts[] = {splits.train(), support_.samples()};
  if (cfg.warm_start) {
    model_ = train_model(parts, splits.n_classes(), splits.feature_dim(), cfg.step, model_);
  } else {
    model_ = train_model(parts, splits.n_classes(), splits.feature_dim(), cfg.pretrain);
  }

  StepResult result;
  result.before = report_;
  result.after = evaluate(model_, splits.val());
  result.reward = compute_reward(result.before, result.after);
  if (!std::isfinite(result.reward)) throw Error(ErrorKind::kNumerical, "non-finite reward");
  report_ = result.after;
  ++step_;
  result.done = support_.size() == cfg.budget;
  result.state = StateVector::from_report(report_, static_cast<double>(support_.size()) /
                                                       static_cast<double>(cfg.budget));
  return result;
}

}  // namespace synth
