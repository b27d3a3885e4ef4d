#pragma once
// Independent reference computations shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "synth/policy.hpp"
#include "synth/ppo.hpp"
#include "synth/rng.hpp"

namespace oracle {

// Discounted reward-to-go minus the state value; with a value-free tail this is
// exactly what GAE with lambda = 1 must produce.
inline std::vector<double> discounted_advantage(const std::vector<double>& rewards,
                                                const std::vector<double>& values, double gamma) {
  std::vector<double> out(rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double g = 0.0, discount = 1.0;
    for (std::size_t u = t; u < rewards.size(); ++u) {
      g += discount * rewards[u];
      discount *= gamma;
    }
    out[t] = g - values[t];
  }
  return out;
}

inline synth::Trajectory make_trajectory(const std::vector<double>& rewards,
                                         const std::vector<double>& values) {
  synth::Trajectory traj(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    traj[i].reward = rewards[i];
    traj[i].value = values[i];
    traj[i].done = i + 1 == rewards.size();
  }
  return traj;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of the full PPO loss against the analytic gradient on a
// 2-hidden-unit policy. Returns the worst per-parameter relative error.
inline double ppo_gradient_check(std::uint64_t seed, std::size_t batch_size = 6) {
  using namespace synth;
  const PolicyShape shape{5, 2, 2, 3};
  PolicyParams params = PolicyParams::initialize(shape, seed);
  Rng rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : params.values()) v = normal(rng);

  PpoConfig config;
  config.value_coef = 0.5;
  config.entropy_coef = 0.01;

  std::vector<Transition> batch;
  std::vector<double> adv, ret;
  while (batch.size() < batch_size) {
    Transition t;
    t.state.resize(shape.input_dim);
    for (double& s : t.state) s = normal(rng);
    const auto out = policy_forward(params, t.state);
    t.action = sample_action(out.heads, rng).action;
    // Old log-prob spread so the batch mixes clipped and unclipped elements.
    const double ratio = std::exp(0.6 * normal(rng));
    if (std::abs(ratio - (1 + config.epsilon)) < 1e-3 || std::abs(ratio - (1 - config.epsilon)) < 1e-3) continue;
    t.log_prob = action_log_prob(out.heads, t.action) - std::log(ratio);
    batch.push_back(t);
    adv.push_back(normal(rng));
    ret.push_back(normal(rng));
  }

  const auto analytic = ppo_loss(params, batch, adv, ret, config).gradient;
  const double h = 1e-5;
  double worst = 0.0;
  auto values = params.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = ppo_loss(params, batch, adv, ret, config).loss;
    values[i] = saved - h;
    const double down = ppo_loss(params, batch, adv, ret, config).loss;
    values[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

// Three-armed bandit on the domain head (class heads have a single choice).
// Returns the probability of the best arm after each update.
inline std::vector<double> bandit_run(std::uint64_t seed, std::size_t updates = 200,
                                      std::size_t pulls_per_update = 32) {
  using namespace synth;
  const PolicyShape shape{1, 64, 3, 1};
  const double means[3] = {0.2, 0.5, 0.8};
  const std::vector<double> state{1.0};
  PpoLearner learner(PolicyParams::initialize(shape, seed), PpoConfig{});
  Rng rng(derive_seed({seed, 0xba9d17ULL}));
  std::normal_distribution<double> noise(0.0, 0.1);

  std::vector<double> best;
  for (std::size_t u = 0; u < updates; ++u) {
    std::vector<Trajectory> batch;
    for (std::size_t k = 0; k < pulls_per_update; ++k) {
      const auto out = policy_forward(learner.params(), state);
      const auto drawn = sample_action(out.heads, rng);
      Transition t;
      t.state = state;
      t.action = drawn.action;
      t.log_prob = drawn.log_prob;
      t.value = out.value;
      t.reward = means[drawn.action.domain] + noise(rng);
      t.done = true;
      batch.push_back({t});
    }
    learner.update(batch, rng);
    best.push_back(policy_forward(learner.params(), state).heads[0].probs[2]);
  }
  return best;
}

}  // namespace oracle
