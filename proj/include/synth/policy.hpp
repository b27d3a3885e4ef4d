#pragma once

// Factored categorical policy: one shared tanh layer, four categorical heads
// (domain + three class slots) and a scalar value head. Parameters live in one
// flat vector so the optimizer, finite-difference checks and checkpoints can
// treat them uniformly.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "synth/prompt_space.hpp"
#include "synth/rng.hpp"

namespace synth {

inline constexpr std::size_t kHeadCount = 1 + kClassSlots;

struct PolicyShape {
  std::size_t input_dim = 0;
  std::size_t hidden = 64;
  std::size_t domain_count = 0;
  std::size_t class_count = 0;

  std::size_t head_arity(std::size_t head) const noexcept {
    return head == 0 ? domain_count : class_count;
  }
  std::size_t parameter_count() const noexcept;

  bool operator==(const PolicyShape&) const = default;
};

// Offsets of each parameter block within the flat vector.
struct PolicyLayout {
  explicit PolicyLayout(const PolicyShape& shape);

  std::size_t hidden_weights = 0;  // hidden x input, row-major
  std::size_t hidden_bias = 0;
  std::array<std::size_t, kHeadCount> head_weights{};  // arity x hidden
  std::array<std::size_t, kHeadCount> head_bias{};
  std::size_t value_weights = 0;
  std::size_t value_bias = 0;
  std::size_t total = 0;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(const PolicyShape& shape);  // all zeros

  // Scaled-normal hidden layer; near-zero heads so the initial policy is close to uniform.
  static PolicyParams initialize(const PolicyShape& shape, std::uint64_t seed);

  const PolicyShape& shape() const noexcept { return shape_; }
  const PolicyLayout& layout() const noexcept { return layout_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const PolicyParams& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  PolicyShape shape_{};
  PolicyLayout layout_{PolicyShape{}};
  std::vector<double> values_;
};

struct Categorical {
  std::vector<double> probs;
  std::vector<double> log_probs;

  double entropy() const;
};

struct PolicyOutput {
  std::array<Categorical, kHeadCount> heads;
  double value = 0.0;
  std::vector<double> hidden;  // post-activation, kept for backprop
};

PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> state);

Categorical softmax(std::span<const double> logits);

struct SampledAction {
  PromptAction action;
  double log_prob = 0.0;
};

// Slots are drawn independently; log_prob is the sum of the four slot log-probs.
SampledAction sample_action(const std::array<Categorical, kHeadCount>& heads, Rng& rng);

// Per-slot argmax; ties go to the lowest index.
SampledAction greedy_action(const std::array<Categorical, kHeadCount>& heads);

double action_log_prob(const std::array<Categorical, kHeadCount>& heads, const PromptAction& action);

// Accumulates into `grad` the parameter gradient given dL/dlogits per head and dL/dvalue.
void policy_backward(const PolicyParams& params, std::span<const double> state,
                     const PolicyOutput& output,
                     const std::array<std::vector<double>, kHeadCount>& logit_grads,
                     double value_grad, std::span<double> grad);

}  // namespace synth
