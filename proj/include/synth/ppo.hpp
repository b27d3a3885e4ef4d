#pragma once

// Clipped-surrogate policy optimization for the factored prompt policy.

#include <cstddef>
#include <span>
#include <vector>

#include "synth/policy.hpp"
#include "synth/rng.hpp"

namespace synth {

struct Transition {
  std::vector<double> state;
  PromptAction action;
  double log_prob = 0.0;  // log pi_old(a|s)
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

using Trajectory = std::vector<Transition>;

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantage + value
};

// Generalized advantage estimation; the value after a done step is 0.
AdvantageEstimate compute_gae(std::span<const Transition> trajectory, double gamma, double lambda);

struct PpoConfig {
  double epsilon = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 4;
  std::size_t minibatch_size = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  bool normalize_advantages = true;
};

struct LossResult {
  double loss = 0.0;
  double policy_loss = 0.0;  // -mean clipped surrogate
  double value_loss = 0.0;   // mean squared error, unweighted
  double entropy = 0.0;      // mean summed head entropy
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> gradient;
};

// loss = -mean(min(r*A, clip(r, 1-eps, 1+eps)*A)) + value_coef*mean((V-R)^2) - entropy_coef*mean(H)
LossResult ppo_loss(const PolicyParams& params, std::span<const Transition> batch,
                    std::span<const double> advantages, std::span<const double> returns,
                    const PpoConfig& config);

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  double learning_rate_ = 3e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct UpdateStats {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double entropy = 0.0;
  std::size_t samples = 0;
  std::size_t gradient_steps = 0;
};

// Holds the parameters together with their optimizer state across updates.
class PpoLearner {
 public:
  PpoLearner(PolicyParams params, PpoConfig config);

  const PolicyParams& params() const noexcept { return params_; }
  const PpoConfig& config() const noexcept { return config_; }

  // E epochs of shuffled minibatch steps over all transitions of the batch.
  UpdateStats update(std::span<const Trajectory> trajectories, Rng& rng);

 private:
  PolicyParams params_;
  PpoConfig config_;
  AdamOptimizer optimizer_;
};

}  // namespace synth
