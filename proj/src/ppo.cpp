#include "synth/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synth/error.hpp"

namespace synth {

AdvantageEstimate compute_gae(std::span<const Transition> trajectory, double gamma, double lambda) {
  if (trajectory.empty()) throw Error(ErrorKind::kInvalidInput, "compute_gae: empty trajectory");
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorKind::kInvalidInput, "compute_gae: gamma and lambda must lie in [0, 1]");
  }
  const std::size_t n = trajectory.size();
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);

  double running = 0.0;
  double next_value = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const auto& t = trajectory[i];
    const double nonterminal = t.done ? 0.0 : 1.0;
    const double delta = t.reward + gamma * next_value * nonterminal - t.value;
    running = delta + gamma * lambda * nonterminal * running;
    out.advantages[i] = running;
    out.returns[i] = running + t.value;
    next_value = t.value;
  }
  return out;
}

LossResult ppo_loss(const PolicyParams& params, std::span<const Transition> batch,
                    std::span<const double> advantages, std::span<const double> returns,
                    const PpoConfig& config) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidInput, "ppo_loss: empty batch");
  if (advantages.size() != batch.size() || returns.size() != batch.size()) {
    throw Error(ErrorKind::kInvalidInput, "ppo_loss: advantages/returns not aligned with batch");
  }
  if (!(config.epsilon > 0.0)) throw Error(ErrorKind::kInvalidInput, "ppo_loss: epsilon must be > 0");

  const auto& shape = params.shape();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossResult out;
  out.gradient.assign(params.values().size(), 0.0);

  std::array<std::vector<double>, kHeadCount> logit_grads;
  for (std::size_t h = 0; h < kHeadCount; ++h) logit_grads[h].resize(shape.head_arity(h));

  std::size_t clipped = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const PolicyOutput fwd = policy_forward(params, t.state);
    const double log_prob = action_log_prob(fwd.heads, t.action);
    const double ratio = std::exp(log_prob - t.log_prob);
    const double adv = advantages[i];
    if (!std::isfinite(ratio) || !std::isfinite(adv) || !std::isfinite(fwd.value)) {
      throw Error(ErrorKind::kNumerical,
                  "ppo_loss: non-finite ratio/advantage/value at batch element " + std::to_string(i));
    }

    const double clipped_ratio = std::clamp(ratio, 1.0 - config.epsilon, 1.0 + config.epsilon);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped_ratio * adv;
    const bool unclipped_active = unclipped_term <= clipped_term;
    const double surrogate = unclipped_active ? unclipped_term : clipped_term;
    if (std::abs(ratio - 1.0) > config.epsilon) ++clipped;

    const double value_err = fwd.value - returns[i];
    double entropy = 0.0;
    for (const auto& head : fwd.heads) entropy += head.entropy();

    out.policy_loss -= surrogate * inv_n;
    out.value_loss += value_err * value_err * inv_n;
    out.entropy += entropy * inv_n;
    out.mean_ratio += ratio * inv_n;

    // d(-surrogate)/d(log pi); zero when the clipped branch is active.
    const double d_logp = unclipped_active ? -ratio * adv * inv_n : 0.0;
    const double d_entropy = -config.entropy_coef * inv_n;
    const std::size_t chosen[kHeadCount] = {t.action.domain, t.action.classes[0],
                                            t.action.classes[1], t.action.classes[2]};
    for (std::size_t h = 0; h < kHeadCount; ++h) {
      const auto& head = fwd.heads[h];
      const double head_entropy = head.entropy();
      auto& g = logit_grads[h];
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double indicator = (k == chosen[h]) ? 1.0 : 0.0;
        g[k] = d_logp * (indicator - head.probs[k]);
        if (d_entropy != 0.0 && head.probs[k] > 0.0) {
          // dH/dz_k = -p_k (log p_k + H)
          g[k] += d_entropy * (-head.probs[k] * (head.log_probs[k] + head_entropy));
        }
      }
    }
    const double d_value = config.value_coef * 2.0 * value_err * inv_n;
    policy_backward(params, t.state, fwd, logit_grads, d_value, out.gradient);
  }

  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.loss = out.policy_loss + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::kNumerical, "ppo_loss: non-finite loss");
  return out;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double learning_rate, double beta1, double beta2,
                             double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(size, 0.0),
      v_(size, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= learning_rate_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

PpoLearner::PpoLearner(PolicyParams params, PpoConfig config)
    : params_(std::move(params)),
      config_(config),
      optimizer_(params_.values().size(), config.learning_rate, config.beta1, config.beta2,
                 config.adam_epsilon) {}

UpdateStats PpoLearner::update(std::span<const Trajectory> trajectories, Rng& rng) {
  std::vector<Transition> flat;
  std::vector<double> advantages;
  std::vector<double> returns;
  for (const auto& traj : trajectories) {
    if (traj.empty()) continue;
    const auto est = compute_gae(traj, config_.gamma, config_.lambda);
    flat.insert(flat.end(), traj.begin(), traj.end());
    advantages.insert(advantages.end(), est.advantages.begin(), est.advantages.end());
    returns.insert(returns.end(), est.returns.begin(), est.returns.end());
  }
  if (flat.empty()) throw Error(ErrorKind::kInvalidInput, "ppo update: no transitions");

  if (config_.normalize_advantages) {
    const double n = static_cast<double>(advantages.size());
    const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    const double sd = std::max(std::sqrt(var / n), 1e-8);
    for (double& a : advantages) a = (a - mean) / sd;
  }

  UpdateStats stats;
  stats.samples = flat.size();
  std::vector<std::size_t> order(flat.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb = std::max<std::size_t>(1, std::min(config_.minibatch_size, flat.size()));

  std::vector<Transition> mb_batch;
  std::vector<double> mb_adv;
  std::vector<double> mb_ret;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      mb_batch.clear();
      mb_adv.clear();
      mb_ret.clear();
      for (std::size_t k = start; k < end; ++k) {
        mb_batch.push_back(flat[order[k]]);
        mb_adv.push_back(advantages[order[k]]);
        mb_ret.push_back(returns[order[k]]);
      }
      const LossResult loss = ppo_loss(params_, mb_batch, mb_adv, mb_ret, config_);
      optimizer_.step(params_.values(), loss.gradient);

      const double w = static_cast<double>(mb_batch.size());
      stats.mean_ratio += loss.mean_ratio * w;
      stats.clip_fraction += loss.clip_fraction * w;
      stats.value_loss += loss.value_loss * w;
      stats.policy_loss += loss.policy_loss * w;
      stats.entropy += loss.entropy * w;
      ++stats.gradient_steps;
    }
  }
  const double total = static_cast<double>(flat.size() * std::max<std::size_t>(config_.epochs, 1));
  if (config_.epochs > 0) {
    stats.mean_ratio /= total;
    stats.clip_fraction /= total;
    stats.value_loss /= total;
    stats.policy_loss /= total;
    stats.entropy /= total;
  }
  return stats;
}

}  // namespace synth
