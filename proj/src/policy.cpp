#include "synth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synth/error.hpp"

namespace synth {

std::size_t PolicyShape::parameter_count() const noexcept { return PolicyLayout(*this).total; }

PolicyLayout::PolicyLayout(const PolicyShape& shape) {
  std::size_t offset = 0;
  hidden_weights = offset;
  offset += shape.hidden * shape.input_dim;
  hidden_bias = offset;
  offset += shape.hidden;
  for (std::size_t h = 0; h < kHeadCount; ++h) {
    head_weights[h] = offset;
    offset += shape.head_arity(h) * shape.hidden;
    head_bias[h] = offset;
    offset += shape.head_arity(h);
  }
  value_weights = offset;
  offset += shape.hidden;
  value_bias = offset;
  offset += 1;
  total = offset;
}

PolicyParams::PolicyParams(const PolicyShape& shape)
    : shape_(shape), layout_(shape), values_(layout_.total, 0.0) {
  if (shape.input_dim == 0 || shape.hidden == 0 || shape.domain_count == 0 ||
      shape.class_count == 0) {
    throw Error(ErrorKind::kConfig, "policy shape has a zero dimension");
  }
}

PolicyParams PolicyParams::initialize(const PolicyShape& shape, std::uint64_t seed) {
  PolicyParams params(shape);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& lay = params.layout_;
  auto& v = params.values_;

  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
  for (std::size_t i = 0; i < shape.hidden * shape.input_dim; ++i) {
    v[lay.hidden_weights + i] = hidden_scale * normal(rng);
  }
  const double head_scale = 0.01 / std::sqrt(static_cast<double>(shape.hidden));
  for (std::size_t h = 0; h < kHeadCount; ++h) {
    for (std::size_t i = 0; i < shape.head_arity(h) * shape.hidden; ++i) {
      v[lay.head_weights[h] + i] = head_scale * normal(rng);
    }
  }
  const double value_scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  for (std::size_t i = 0; i < shape.hidden; ++i) {
    v[lay.value_weights + i] = value_scale * normal(rng);
  }
  return params;
}

double Categorical::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * log_probs[i];
  }
  return h;
}

Categorical softmax(std::span<const double> logits) {
  Categorical out;
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  out.probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - max_logit);
    sum += out.probs[i];
  }
  const double log_sum = std::log(sum);
  out.log_probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] /= sum;
    out.log_probs[i] = logits[i] - max_logit - log_sum;
  }
  return out;
}

PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> state) {
  const auto& shape = params.shape();
  if (state.size() != shape.input_dim) {
    throw Error(ErrorKind::kConfig, "policy expects state dimension " +
                                        std::to_string(shape.input_dim) + ", got " +
                                        std::to_string(state.size()));
  }
  const auto& lay = params.layout();
  const auto v = params.values();

  PolicyOutput out;
  out.hidden.resize(shape.hidden);
  for (std::size_t j = 0; j < shape.hidden; ++j) {
    double pre = v[lay.hidden_bias + j];
    const double* row = &v[lay.hidden_weights + j * shape.input_dim];
    for (std::size_t i = 0; i < shape.input_dim; ++i) pre += row[i] * state[i];
    out.hidden[j] = std::tanh(pre);
  }

  std::vector<double> logits;
  for (std::size_t h = 0; h < kHeadCount; ++h) {
    const std::size_t arity = shape.head_arity(h);
    logits.assign(arity, 0.0);
    for (std::size_t k = 0; k < arity; ++k) {
      double z = v[lay.head_bias[h] + k];
      const double* row = &v[lay.head_weights[h] + k * shape.hidden];
      for (std::size_t j = 0; j < shape.hidden; ++j) z += row[j] * out.hidden[j];
      logits[k] = z;
    }
    out.heads[h] = softmax(logits);
  }

  double value = v[lay.value_bias];
  for (std::size_t j = 0; j < shape.hidden; ++j) value += v[lay.value_weights + j] * out.hidden[j];
  out.value = value;
  return out;
}

namespace {

std::size_t sample_index(const Categorical& dist, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) {
    cumulative += dist.probs[k];
    if (u < cumulative) return k;
  }
  // u landed in the rounding gap above the last cumulative sum.
  for (std::size_t k = dist.probs.size(); k-- > 0;) {
    if (dist.probs[k] > 0.0) return k;
  }
  return 0;
}

std::size_t argmax_index(const Categorical& dist) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.probs.size(); ++k) {
    if (dist.probs[k] > dist.probs[best]) best = k;
  }
  return best;
}

}  // namespace

double action_log_prob(const std::array<Categorical, kHeadCount>& heads, const PromptAction& action) {
  double lp = heads[0].log_probs.at(action.domain);
  for (std::size_t s = 0; s < kClassSlots; ++s) lp += heads[1 + s].log_probs.at(action.classes[s]);
  return lp;
}

SampledAction sample_action(const std::array<Categorical, kHeadCount>& heads, Rng& rng) {
  SampledAction out;
  out.action.domain = sample_index(heads[0], rng);
  for (std::size_t s = 0; s < kClassSlots; ++s) out.action.classes[s] = sample_index(heads[1 + s], rng);
  out.log_prob = action_log_prob(heads, out.action);
  return out;
}

SampledAction greedy_action(const std::array<Categorical, kHeadCount>& heads) {
  SampledAction out;
  out.action.domain = argmax_index(heads[0]);
  for (std::size_t s = 0; s < kClassSlots; ++s) out.action.classes[s] = argmax_index(heads[1 + s]);
  out.log_prob = action_log_prob(heads, out.action);
  return out;
}

void policy_backward(const PolicyParams& params, std::span<const double> state,
                     const PolicyOutput& output,
                     const std::array<std::vector<double>, kHeadCount>& logit_grads,
                     double value_grad, std::span<double> grad) {
  const auto& shape = params.shape();
  const auto& lay = params.layout();
  const auto v = params.values();
  const auto& hidden = output.hidden;

  std::vector<double> d_hidden(shape.hidden, 0.0);
  for (std::size_t h = 0; h < kHeadCount; ++h) {
    const auto& g = logit_grads[h];
    for (std::size_t k = 0; k < shape.head_arity(h); ++k) {
      if (g[k] == 0.0) continue;
      grad[lay.head_bias[h] + k] += g[k];
      double* grow = &grad[lay.head_weights[h] + k * shape.hidden];
      const double* wrow = &v[lay.head_weights[h] + k * shape.hidden];
      for (std::size_t j = 0; j < shape.hidden; ++j) {
        grow[j] += g[k] * hidden[j];
        d_hidden[j] += g[k] * wrow[j];
      }
    }
  }
  if (value_grad != 0.0) {
    grad[lay.value_bias] += value_grad;
    for (std::size_t j = 0; j < shape.hidden; ++j) {
      grad[lay.value_weights + j] += value_grad * hidden[j];
      d_hidden[j] += value_grad * v[lay.value_weights + j];
    }
  }
  for (std::size_t j = 0; j < shape.hidden; ++j) {
    const double d_pre = d_hidden[j] * (1.0 - hidden[j] * hidden[j]);
    if (d_pre == 0.0) continue;
    grad[lay.hidden_bias + j] += d_pre;
    double* grow = &grad[lay.hidden_weights + j * shape.input_dim];
    for (std::size_t i = 0; i < shape.input_dim; ++i) grow[i] += d_pre * state[i];
  }
}

}  // namespace synth
