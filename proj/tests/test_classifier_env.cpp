#include <doctest.h>

#include <cmath>
#include <random>

#include "synth/classifier.hpp"
#include "synth/environment.hpp"
#include "synth/error.hpp"
#include "synth/generator.hpp"
#include "synth/orchestrator.hpp"
#include "synth/synthetic_data.hpp"

using namespace synth;

namespace {

std::vector<LabeledSample> blobs(std::size_t n_classes, std::size_t per_class, double spread, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledSample s;
      s.label = c;
      s.features = {normal(rng), normal(rng), normal(rng)};
      s.features[c % 3] += (c < 3 ? 6.0 : -6.0);
      out.push_back(s);
    }
  }
  return out;
}

struct SmallWorld {
  std::shared_ptr<const EnvironmentContext> context;
  std::unique_ptr<SimulatedGenerator> generator;
};

SmallWorld small_world(std::size_t budget = 40, std::size_t m = 10, std::uint64_t seed = 3) {
  SyntheticDataConfig data;
  data.n_classes = 4;
  data.feature_dim = 6;
  data.samples_per_class = 40;
  data.train_fraction = 0.5;
  data.val_fraction = 0.25;
  data.test_fraction = 0.25;
  auto world = make_synthetic_dataset(data, seed);
  SimulatorSpec spec;
  spec.centroids = world.centroids;
  spec.class_sigma = world.class_sigma;
  spec.domain_noise = {1.0, 1.5};
  EnvConfig env;
  env.images_per_step = m;
  env.budget = budget;
  env.pretrain.epochs = 50;
  env.step.epochs = 5;
  env.run_seed = seed;
  SmallWorld out;
  out.context = make_environment_context(Dictionary({"photo", "sketch"}, {"a", "b", "c", "d"}),
                                         std::make_shared<const DatasetSplits>(std::move(world.splits)), env);
  out.generator = std::make_unique<SimulatedGenerator>(spec);
  return out;
}

EvalReport report(double acc, double entropy) {
  EvalReport r;
  r.accuracy = acc;
  r.mean_entropy = entropy;
  r.n_eval = 100;
  return r;
}

}  // namespace

TEST_CASE("entropy exact values") {
  CHECK(entropy_of(std::vector<double>(10, 0.1)) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(std::abs(entropy_of(std::vector<double>(10, 0.1)) - std::log(10.0)) <= 1e-9);
  std::vector<double> onehot(10, 0.0);
  onehot[4] = 1.0;
  CHECK(entropy_of(onehot) == 0.0);
  CHECK(std::abs(entropy_of(std::vector<double>{0.5, 0.5}) - std::log(2.0)) <= 1e-9);
  CHECK_THROWS_AS(entropy_of(std::vector<double>{0.5, std::nan("")}), Error);
}

TEST_CASE("entropy bounds over random distributions") {
  Rng rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(2 + trial % 20);
    double sum = 0.0;
    for (double& x : p) sum += (x = unit(rng));
    for (double& x : p) x /= sum;
    const double h = entropy_of(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(p.size())) + 1e-12);
  }
}

TEST_CASE("evaluate perfect and uniform models") {
  const auto data = blobs(4, 25, 0.5, 1);
  ClassifierModel zero(4, 3);
  const auto uniform = evaluate(zero, data);
  CHECK(uniform.mean_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  // all logits tie, so everything is predicted as class 0
  CHECK(uniform.accuracy == doctest::Approx(0.25));
  CHECK(uniform.per_class_accuracy[0] == 1.0);
  CHECK(uniform.per_class_accuracy[3] == 0.0);

  TrainerConfig config;
  config.epochs = 300;
  const auto trained = train_model(data, 4, 3, config);
  const auto r = evaluate(trained, data);
  CHECK(r.accuracy == 1.0);
  for (double a : r.per_class_accuracy) CHECK(a == 1.0);
  CHECK(r.n_eval == 100);
  CHECK_THROWS_AS(evaluate(trained, std::vector<LabeledSample>{}), Error);
}

TEST_CASE("evaluate agrees with a brute-force recount") {
  const auto data = blobs(5, 30, 3.0, 2);
  Rng rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ClassifierModel model(5, 3);
    for (double& w : model.weights) w = normal(rng);
    for (double& b : model.bias) b = normal(rng);
    const auto r = evaluate(model, data);

    std::size_t correct = 0;
    std::vector<std::size_t> hit(5, 0), seen(5, 0);
    double h = 0.0;
    for (const auto& s : data) {
      std::vector<double> z(5);
      for (std::size_t c = 0; c < 5; ++c) {
        z[c] = model.bias[c];
        for (std::size_t j = 0; j < 3; ++j) z[c] += model.weights[c * 3 + j] * s.features[j];
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < 5; ++c) if (z[c] > z[best]) best = c;
      const double mx = z[best];
      double norm = 0.0;
      for (double v : z) norm += std::exp(v - mx);
      for (double v : z) {
        const double p = std::exp(v - mx) / norm;
        if (p > 0) h -= p * std::log(p);
      }
      ++seen[s.label];
      if (best == s.label) {
        ++correct;
        ++hit[s.label];
      }
    }
    CHECK(r.accuracy == doctest::Approx(double(correct) / data.size()).epsilon(1e-15));
    CHECK(r.mean_entropy == doctest::Approx(h / data.size()).epsilon(1e-12));
    for (std::size_t c = 0; c < 5; ++c) CHECK(r.per_class_accuracy[c] == doctest::Approx(double(hit[c]) / seen[c]));
  }
}

TEST_CASE("evaluate flags classes absent from the split") {
  auto data = blobs(3, 10, 0.5, 4);
  std::erase_if(data, [](const LabeledSample& s) { return s.label == 1; });
  const auto r = evaluate(ClassifierModel(3, 3), data);
  CHECK(r.empty_class[1]);
  CHECK_FALSE(r.empty_class[0]);
  CHECK(r.per_class_accuracy[1] == 0.0);
}

TEST_CASE("trainer") {
  const auto data = blobs(4, 50, 1.0, 6);
  TrainerConfig config;
  config.epochs = 200;
  config.seed = 9;
  const auto a = train_model(data, 4, 3, config);
  CHECK(evaluate(a, data).accuracy >= 0.99);
  CHECK(train_model(data, 4, 3, config) == a);

  config.epochs = 0;
  CHECK(train_model(data, 4, 3, config, a) == a);

  config.epochs = 10;
  const auto warm = train_model(data, 4, 3, config, a);
  CHECK_FALSE(warm == a);
  CHECK_THROWS_AS(train_model(data, 5, 3, config, a), Error);
  CHECK_THROWS_AS(train_model(std::vector<LabeledSample>{}, 4, 3, config), Error);
}

TEST_CASE("reward values") {
  CHECK(compute_reward(report(0.920, 0.5), report(0.927, 0.5)) == doctest::Approx(0.007).epsilon(1e-12));
  CHECK(compute_reward(report(0.5, 1.0), report(0.5, 0.8)) == doctest::Approx(0.2));
  Rng rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto a = report(unit(rng), 2 * unit(rng));
    const auto b = report(unit(rng), 2 * unit(rng));
    CHECK(std::abs(compute_reward(a, b) + compute_reward(b, a)) <= 1e-12);
  }
  auto bad = report(0.5, 0.5);
  bad.n_eval = 99;
  CHECK_THROWS_AS(compute_reward(report(0.5, 0.5), bad), Error);
}

TEST_CASE("state vector layout") {
  EvalReport r = report(0.5, 0.7);
  r.per_class_accuracy = {0.1, 0.2, 0.3};
  const auto s = StateVector::from_report(r, 0.25);
  CHECK(s.dimension() == 5);
  CHECK(s.features() == std::vector<double>{0.1, 0.2, 0.3, 0.7, 0.25});
}

TEST_CASE("support set labels by the first slot") {
  SupportSet s(20);
  SupportRecord rec;
  rec.prompt.action = {0, {2, 1, 0}};
  s.append(rec, std::vector<std::vector<double>>(10, std::vector<double>(3, 1.0)));
  CHECK(s.size() == 10);
  for (const auto& x : s.samples()) {
    CHECK(x.label == 2);
    CHECK(x.provenance == Provenance::kSynthetic);
    CHECK(x.prompt_id == 0u);
  }
  s.append(rec, std::vector<std::vector<double>>(10, std::vector<double>(3, 1.0)));
  CHECK_THROWS_AS(s.append(rec, std::vector<std::vector<double>>(1, std::vector<double>(3, 1.0))), Error);
  s.clear();
  CHECK(s.size() == 0);
}

TEST_CASE("env config validation") {
  EnvConfig c;
  c.budget = 25;
  c.images_per_step = 10;
  CHECK_THROWS_AS(c.validate(), Error);
  c.budget = 400;
  CHECK_NOTHROW(c.validate());
  CHECK(c.steps_per_episode() == 40);
  c.images_per_step = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("episode bookkeeping") {
  auto w = small_world(400, 10);
  Environment env(w.context, *w.generator);
  CHECK_THROWS_AS(env.step({0, {0, 0, 0}}), Error);
  const auto s0 = env.reset();
  CHECK(s0.budget_fraction == 0.0);
  CHECK(s0.dimension() == 6);
  Rng rng(4);
  double total = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const auto r = env.step(random_action(w.context->dictionary, rng));
    total += r.reward;
    CHECK(r.done == (k == 40));
    CHECK(env.support_set().size() == std::size_t(10 * k));
    CHECK(r.state.budget_fraction == doctest::Approx(k / 40.0));
  }
  CHECK(env.done());
  CHECK_THROWS_AS(env.step({0, {0, 0, 0}}), Error);

  // rewards telescope to the end-to-end change
  const auto& pre = w.context->pretrained_report;
  const auto& fin = env.current_report();
  const double direct = (fin.accuracy - pre.accuracy) - (fin.mean_entropy - pre.mean_entropy);
  CHECK(std::abs(total - direct) <= 1e-9);
  CHECK(w.context->splits->test_reads() == 0);
}

TEST_CASE("reset restores the pretrained state") {
  auto w = small_world();
  Environment env(w.context, *w.generator);
  const auto first = env.reset();
  env.step({1, {3, 2, 1}});
  const auto again = env.reset();
  CHECK(first == again);
  CHECK(env.model() == w.context->pretrained);
  CHECK(env.support_set().size() == 0);
}

TEST_CASE("an episode replays from its action log") {
  auto w = small_world(100, 10, 7);
  Environment env(w.context, *w.generator);
  Rng rng(12);
  const auto original = run_random_episode(env, rng);
  const auto samples = env.support_set().samples();
  std::vector<PromptAction> actions;
  for (const auto& t : original.trajectory) actions.push_back(t.action);

  Environment other(w.context, *w.generator);
  const auto replay = run_scripted_episode(other, actions);
  REQUIRE(replay.trajectory.size() == original.trajectory.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    CHECK(replay.trajectory[i].reward == original.trajectory[i].reward);
    CHECK(replay.trajectory[i].state == original.trajectory[i].state);
  }
  REQUIRE(other.support_set().samples().size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(other.support_set().samples()[i].features == samples[i].features);
}

TEST_CASE("cold retraining per step") {
  auto w = small_world(20, 10);
  auto ctx = std::make_shared<EnvironmentContext>(*w.context);
  ctx->config.warm_start = false;
  Environment env(ctx, *w.generator);
  env.reset();
  env.step({0, {1, 1, 1}});
  const std::span<const LabeledSample> parts[] = {ctx->splits->train(), env.support_set().samples()};
  CHECK(env.model() == train_model(parts, 4, 6, ctx->config.pretrain));
}
