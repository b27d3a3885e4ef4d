#include "synth/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "synth/checkpoint.hpp"
#include "synth/error.hpp"
#include "synth/synthetic_data.hpp"

namespace synth {

using nlohmann::json;

namespace {

// Seed-stream tags.
constexpr std::uint64_t kPolicyInitTag = 0x706f6c696379ULL;
constexpr std::uint64_t kEpisodeTag = 0x6570697364ULL;
constexpr std::uint64_t kShuffleTag = 0x73687566ULL;
constexpr std::uint64_t kRandomBaselineTag = 0x72616e64ULL;

SimulatorSpec fit_simulator(const DatasetSplits& splits) {
  const std::size_t n = splits.n_classes();
  const std::size_t d = splits.feature_dim();
  SimulatorSpec spec;
  spec.centroids.assign(n, std::vector<double>(d, 0.0));
  spec.class_sigma.assign(n, 1.0);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& s : splits.train()) {
    ++counts[s.label];
    for (std::size_t j = 0; j < d; ++j) spec.centroids[s.label][j] += s.features[j];
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (counts[c] == 0) throw Error(ErrorKind::kConfig, "class " + std::to_string(c) + " has no training samples");
    for (double& v : spec.centroids[c]) v /= static_cast<double>(counts[c]);
  }
  std::vector<double> sq(n, 0.0);
  for (const auto& s : splits.train()) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = s.features[j] - spec.centroids[s.label][j];
      sq[s.label] += diff * diff;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double var = sq[c] / static_cast<double>(counts[c] * d);
    spec.class_sigma[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return spec;
}


}  // namespace

RunWorld build_world(const RunConfig& config, std::uint64_t seed) {
  Dictionary dict = config.dictionary();
  SimulatorSpec spec;
  std::shared_ptr<const DatasetSplits> splits;
  if (config.data_dir) {
    auto loaded = std::make_shared<DatasetSplits>(read_splits(*config.data_dir));
    spec = fit_simulator(*loaded);
    splits = std::move(loaded);
  } else {
    auto world = make_synthetic_dataset(config.data, seed);
    spec.centroids = std::move(world.centroids);
    spec.class_sigma = std::move(world.class_sigma);
    splits = std::make_shared<const DatasetSplits>(std::move(world.splits));
  }
  if (splits->n_classes() != dict.class_count()) {
    throw Error(ErrorKind::kConfig, "dataset class count does not match the dictionary");
  }
  spec.slot_weights = config.generator.slot_weights;
  spec.domain_noise = config.generator.resolved_domain_noise(dict.domain_count());
  spec.validate();
  return RunWorld{std::move(dict), std::move(splits), std::move(spec)};
}

std::unique_ptr<Generator> make_generator(const RunConfig& config, const RunWorld& world) {
  if (config.generator.backend == BackendKind::kRemote) {
    return std::make_unique<RemoteGenerator>(config.generator.remote);
  }
  return std::make_unique<SimulatedGenerator>(world.simulator);
}

PolicyShape policy_shape(const RunConfig& config) {
  return PolicyShape{config.classes.size() + 2, config.training.hidden, config.domains.size(),
                     config.classes.size()};
}

namespace {

template <typename ChooseFn>
Episode drive_episode(Environment& env, ChooseFn&& choose) {
  Episode ep;
  StateVector state = env.reset();
  const std::size_t steps = env.context().config.steps_per_episode();
  ep.trajectory.reserve(steps);
  bool done = false;
  while (!done) {
    Transition t;
    t.state = state.features();
    const auto choice = choose(t.state, env.steps_taken());
    t.action = choice.action;
    t.log_prob = choice.log_prob;
    t.value = choice.value;
    StepResult step = env.step(t.action);
    t.reward = step.reward;
    t.done = step.done;
    done = step.done;
    ep.total_reward += step.reward;
    ep.reports.push_back(std::move(step.after));
    ep.trajectory.push_back(std::move(t));
    state = std::move(step.state);
  }
  return ep;
}

struct Choice {
  PromptAction action;
  double log_prob = 0.0;
  double value = 0.0;
};

}  // namespace

Episode run_episode(const PolicyParams& policy, Environment& env, Rng& rng) {
  return drive_episode(env, [&](const std::vector<double>& s, std::size_t) {
    const auto out = policy_forward(policy, s);
    const auto sampled = sample_action(out.heads, rng);
    return Choice{sampled.action, sampled.log_prob, out.value};
  });
}

Episode run_greedy_episode(const PolicyParams& policy, Environment& env) {
  return drive_episode(env, [&](const std::vector<double>& s, std::size_t) {
    const auto out = policy_forward(policy, s);
    const auto greedy = greedy_action(out.heads);
    return Choice{greedy.action, greedy.log_prob, out.value};
  });
}

Episode run_random_episode(Environment& env, Rng& rng, bool randomize_domain) {
  const Dictionary& dict = env.context().dictionary;
  const double log_n = std::log(static_cast<double>(dict.class_count()));
  const double log_p = -(randomize_domain ? std::log(static_cast<double>(dict.domain_count())) : 0.0) -
                       static_cast<double>(kClassSlots) * log_n;
  return drive_episode(env, [&](const std::vector<double>&, std::size_t) {
    const PromptAction a = randomize_domain ? random_action(dict, rng) : random_action_fixed_domain(dict, 0, rng);
    return Choice{a, log_p, 0.0};
  });
}

Episode run_scripted_episode(Environment& env, const std::vector<PromptAction>& actions) {
  return drive_episode(env, [&](const std::vector<double>&, std::size_t step) {
    if (step >= actions.size()) throw Error(ErrorKind::kInvalidInput, "scripted episode ran out of actions");
    return Choice{actions[step], 0.0, 0.0};
  });
}

TrainResult train_agent(const RunConfig& config, std::shared_ptr<const EnvironmentContext> context,
                        Generator& generator, std::uint64_t seed, const TrainOptions& options) {
  PpoLearner learner(PolicyParams::initialize(policy_shape(config), derive_seed({seed, kPolicyInitTag})),
                     config.ppo);
  TrainResult result;

  const std::size_t n_episodes = config.training.episodes_per_update;
  const std::size_t n_threads = std::min(config.training.threads, n_episodes);
  std::vector<Environment> envs;
  envs.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) envs.emplace_back(context, generator);

  try {
    for (std::size_t update = 0; update < config.training.total_updates; ++update) {
      const PolicyParams snapshot = learner.params();
      std::vector<Episode> episodes(n_episodes);
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto worker = [&](Environment& env) {
        for (std::size_t i = next++; i < n_episodes; i = next++) {
          try {
            Rng rng(derive_seed({seed, kEpisodeTag, update, i}));
            episodes[i] = run_episode(snapshot, env, rng);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_episodes;
          }
        }
      };
      if (n_threads == 1) {
        worker(envs.front());
      } else {
        std::vector<std::jthread> pool;
        for (auto& env : envs) pool.emplace_back(worker, std::ref(env));
      }
      if (failure) std::rethrow_exception(failure);

      std::vector<Trajectory> trajectories;
      UpdateLog entry;
      entry.update = update;
      for (std::size_t i = 0; i < n_episodes; ++i) {
        entry.episode_rewards.push_back(episodes[i].total_reward);
        entry.mean_episode_reward += episodes[i].total_reward / static_cast<double>(n_episodes);
        if (options.metrics) {
          std::vector<std::uint64_t> actions;
          for (const auto& t : episodes[i].trajectory) actions.push_back(action_index(context->dictionary, t.action));
          json line = {{"type", "episode"},
                       {"update", update},
                       {"episode", i},
                       {"total_reward", episodes[i].total_reward},
                       {"final_val_accuracy", episodes[i].reports.back().accuracy},
                       {"final_val_entropy", episodes[i].reports.back().mean_entropy},
                       {"actions", actions}};
          *options.metrics << line.dump() << '\n';
        }
        trajectories.push_back(std::move(episodes[i].trajectory));
      }
      Rng shuffle_rng(derive_seed({seed, kShuffleTag, update}));
      entry.stats = learner.update(trajectories, shuffle_rng);
      if (options.metrics) {
        json line = {{"type", "update"},
                     {"update", update},
                     {"mean_episode_reward", entry.mean_episode_reward},
                     {"mean_ratio", entry.stats.mean_ratio},
                     {"clip_fraction", entry.stats.clip_fraction},
                     {"value_loss", entry.stats.value_loss},
                     {"policy_loss", entry.stats.policy_loss},
                     {"entropy", entry.stats.entropy}};
        *options.metrics << line.dump() << '\n';
        options.metrics->flush();
      }
      result.log.push_back(std::move(entry));
    }
  } catch (const Error& e) {
    if (options.checkpoint_path && e.kind() == ErrorKind::kBackendUnavailable) {
      save_checkpoint(*options.checkpoint_path, learner.params(), config.hash());
    }
    throw;
  }

  result.params = learner.params();
  if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, result.params, config.hash());
  return result;
}

Finalized finalize_support_set(const PolicyParams& params, std::shared_ptr<const EnvironmentContext> context,
                               Generator& generator) {
  Environment env(std::move(context), generator);
  Finalized out;
  out.episode = run_greedy_episode(params, env);
  out.support = env.support_set();
  return out;
}

double final_test_accuracy(const EnvironmentContext& context, const SupportSet& support) {
  const auto& splits = *context.splits;
  const std::span<const LabeledSample> parts[] = {splits.train(), support.samples()};
  const auto model = support.size() == 0
                         ? context.pretrained
                         : train_model(parts, splits.n_classes(), splits.feature_dim(), context.config.pretrain);
  return evaluate(model, splits.test()).accuracy;
}

BaselineResult run_baseline(BaselineMode mode, const RunConfig& config,
                            std::shared_ptr<const EnvironmentContext> context, Generator& generator,
                            std::uint64_t seed) {
  BaselineResult out{0.0, SupportSet(context->config.budget)};
  if (mode == BaselineMode::kRandom) {
    Rng rng(derive_seed({seed, kRandomBaselineTag}));
    const auto& dict = context->dictionary;
    // Only S matters here, so skip the per-step retraining of the environment loop.
    for (std::size_t step = 0; step < context->config.steps_per_episode(); ++step) {
      const PromptAction a = config.random_baseline_randomizes_domain ? random_action(dict, rng)
                                                                      : random_action_fixed_domain(dict, 0, rng);
      const Prompt prompt = format_prompt(dict, a);
      const std::uint64_t flat = action_index(dict, a);
      GeneratorRequest req{prompt, context->config.images_per_step,
                           request_seed(context->config.run_seed, step, flat), context->splits->feature_dim()};
      auto batch = generator.generate(req);
      out.support.append(SupportRecord{step, prompt, req.count, req.seed, flat, batch.backend_info},
                         std::move(batch.samples));
    }
  }
  out.test_accuracy = final_test_accuracy(*context, out.support);
  return out;
}

SupportSetFiles write_support_set(const std::filesystem::path& dir, const SupportSet& support,
                                  const RunWorld& world, const RunConfig& config, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SupportSetFiles files{dir / "support_set.csv", dir / "support_set.sidecar.tsv", dir / "manifest.json"};
  write_dataset(files.samples, support.samples(), world.splits->n_classes(), world.splits->feature_dim());

  std::ofstream sidecar(files.sidecar, std::ios::binary);
  sidecar << "sample_line\tstep\tprompt\n";
  for (std::size_t i = 0; i < support.samples().size(); ++i) {
    const auto& rec = support.records()[*support.samples()[i].prompt_id];
    sidecar << (i + 2) << '\t' << rec.step << '\t' << rec.prompt.text << '\n';
  }

  json entries = json::array();
  for (const auto& rec : support.records()) {
    entries.push_back({{"step", rec.step},
                       {"domain_idx", rec.prompt.action.domain},
                       {"class_idx", rec.prompt.action.classes},
                       {"flat_index", rec.flat_index},
                       {"prompt", rec.prompt.text},
                       {"count", rec.count},
                       {"seed", rec.seed},
                       {"label", rec.prompt.action.classes[0]}});
  }
  json manifest = {
      {"version", 1},
      {"backend", config.generator.backend == BackendKind::kRemote ? "remote" : "simulated"},
      {"run_seed", seed},
      {"config_hash", config.hash()},
      {"n_classes", world.splits->n_classes()},
      {"feature_dim", world.splits->feature_dim()},
      {"capacity", support.capacity()},
      {"dictionary", {{"domains", world.dictionary.domains()}, {"classes", world.dictionary.classes()}}},
      {"simulator",
       {{"centroids", world.simulator.centroids},
        {"class_sigma", world.simulator.class_sigma},
        {"slot_weights", world.simulator.slot_weights},
        {"domain_noise", world.simulator.domain_noise}}},
      {"samples_file", files.samples.filename().string()},
      {"entries", entries},
  };
  std::ofstream out(files.manifest, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kConfig, "cannot write manifest " + files.manifest.string());
  return files;
}

ReplayResult replay_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
    Dictionary dict(doc.at("dictionary").at("domains").get<std::vector<std::string>>(),
                    doc.at("dictionary").at("classes").get<std::vector<std::string>>());
    SimulatorSpec spec;
    const auto& sim = doc.at("simulator");
    spec.centroids = sim.at("centroids").get<std::vector<std::vector<double>>>();
    spec.class_sigma = sim.at("class_sigma").get<std::vector<double>>();
    spec.slot_weights = sim.at("slot_weights").get<std::array<double, kClassSlots>>();
    spec.domain_noise = sim.at("domain_noise").get<std::vector<double>>();
    spec.validate();
    const auto feature_dim = doc.at("feature_dim").get<std::size_t>();

    ReplayResult result;
    result.support = SupportSet(doc.at("capacity").get<std::size_t>());
    result.n_classes = doc.at("n_classes").get<std::size_t>();
    result.feature_dim = feature_dim;
    for (const auto& e : doc.at("entries")) {
      PromptAction action;
      action.domain = e.at("domain_idx").get<std::size_t>();
      action.classes = e.at("class_idx").get<std::array<std::size_t, kClassSlots>>();
      const Prompt prompt = format_prompt(dict, action);
      if (prompt.text != e.at("prompt").get<std::string>()) {
        throw Error(ErrorKind::kInvalidInput, "manifest prompt text does not match its action indices");
      }
      GeneratorRequest req{prompt, e.at("count").get<std::size_t>(), e.at("seed").get<std::uint64_t>(), feature_dim};
      auto batch = simulate_generate(spec, req);
      result.support.append(SupportRecord{e.at("step").get<std::size_t>(), prompt, req.count, req.seed,
                                          action_index(dict, action), batch.backend_info},
                            std::move(batch.samples));
    }

    result.samples_file = manifest_path.parent_path() / doc.at("samples_file").get<std::string>();
    if (std::filesystem::exists(result.samples_file)) {
      const auto stored = read_dataset(result.samples_file);
      bool same = stored.samples.size() == result.support.size();
      for (std::size_t i = 0; same && i < stored.samples.size(); ++i) {
        same = stored.samples[i].label == result.support.samples()[i].label &&
               stored.samples[i].features == result.support.samples()[i].features;
      }
      result.matches_samples_file = same;
    }
    return result;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "manifest " + manifest_path.string() + ": " + e.what());
  }
}

void RunReport::summarize() {
  auto summarize_one = [&](auto member) {
    SettingSummary s;
    std::vector<double> values;
    for (const auto& row : rows) {
      if (row.*member) values.push_back(*(row.*member));
    }
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    s.mean = mean;
    s.sd = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
  };
  pretrained = summarize_one(&SeedRow::pretrained);
  rand_syn = summarize_one(&SeedRow::rand_syn);
  ours = summarize_one(&SeedRow::ours);
}

std::string RunReport::to_text() const {
  std::ostringstream out;
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream c;
    if (v) {
      c << std::fixed << std::setprecision(2) << 100.0 * *v;
    } else {
      c << "missing";
    }
    return c.str();
  };
  auto summary_cell = [](const SettingSummary& s) {
    std::ostringstream c;
    if (s.mean) {
      c << std::fixed << std::setprecision(2) << 100.0 * *s.mean << " +- " << 100.0 * *s.sd;
    } else {
      c << "missing";
    }
    return c.str();
  };
  out << "Test accuracy (%)\n";
  out << std::left << std::setw(12) << "seed" << std::setw(18) << "pretrained" << std::setw(18) << "rand_syn"
      << "ours\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(12) << row.seed << std::setw(18) << cell(row.pretrained) << std::setw(18)
        << cell(row.rand_syn) << cell(row.ours) << '\n';
  }
  out << std::left << std::setw(12) << "mean+-sd" << std::setw(18) << summary_cell(pretrained) << std::setw(18)
      << summary_cell(rand_syn) << summary_cell(ours) << '\n';
  for (const auto& row : rows) {
    for (const auto& err : row.errors) out << "seed " << row.seed << ": " << err << '\n';
  }
  return out.str();
}

std::string RunReport::to_json() const {
  auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
  auto summary = [&](const SettingSummary& s) {
    return json{{"mean", opt(s.mean)}, {"sd", opt(s.sd)}, {"count", s.count}};
  };
  json per_seed = json::array();
  for (const auto& row : rows) {
    per_seed.push_back({{"seed", row.seed},
                        {"pretrained", opt(row.pretrained)},
                        {"rand_syn", opt(row.rand_syn)},
                        {"ours", opt(row.ours)},
                        {"errors", row.errors},
                        {"manifest", row.manifest},
                        {"seconds", row.seconds}});
  }
  json doc = {{"settings", {"pretrained", "rand_syn", "ours"}},
              {"per_seed", per_seed},
              {"summary",
               {{"pretrained", summary(pretrained)}, {"rand_syn", summary(rand_syn)}, {"ours", summary(ours)}}},
              {"total_seconds", total_seconds}};
  return doc.dump(2);
}

RunReport compare_and_report(const RunConfig& config, const CompareOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto t_start = Clock::now();
  RunReport report;
  std::ofstream metrics;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    metrics.open(*options.output_dir / "metrics.jsonl", std::ios::binary);
  }

  for (std::size_t k = 0; k < config.seeds; ++k) {
    const std::uint64_t seed = config.seed + k;
    const auto t_seed = Clock::now();
    SeedRow row;
    row.seed = seed;
    try {
      const RunWorld world = build_world(config, seed);
      auto generator = make_generator(config, world);
      auto context = make_environment_context(world.dictionary, world.splits, config.env_config(seed));

      row.pretrained = run_baseline(BaselineMode::kNone, config, context, *generator, seed).test_accuracy;
      try {
        row.rand_syn = run_baseline(BaselineMode::kRandom, config, context, *generator, seed).test_accuracy;
      } catch (const Error& e) {
        row.errors.push_back(std::string("rand_syn: ") + e.what());
      }
      try {
        TrainOptions train_opts;
        std::optional<std::filesystem::path> seed_dir;
        if (options.output_dir) {
          seed_dir = *options.output_dir / ("seed_" + std::to_string(seed));
          train_opts.checkpoint_path = *seed_dir / "policy.ckpt";
          train_opts.metrics = &metrics;
        }
        const auto trained = train_agent(config, context, *generator, seed, train_opts);
        const auto final = finalize_support_set(trained.params, context, *generator);
        if (seed_dir) row.manifest = write_support_set(*seed_dir, final.support, world, config, seed).manifest.string();
        row.ours = final_test_accuracy(*context, final.support);
      } catch (const Error& e) {
        row.errors.push_back(std::string("ours: ") + e.what());
      }
    } catch (const Error& e) {
      row.errors.push_back(std::string("setup: ") + e.what());
    }
    row.seconds = std::chrono::duration<double>(Clock::now() - t_seed).count();
    if (options.progress) {
      *options.progress << "seed " << seed << ": pretrained=" << (row.pretrained ? *row.pretrained : -1.0)
                        << " rand_syn=" << (row.rand_syn ? *row.rand_syn : -1.0)
                        << " ours=" << (row.ours ? *row.ours : -1.0) << " (" << row.seconds << " s)\n";
    }
    report.rows.push_back(std::move(row));
  }
  report.summarize();
  report.total_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();

  if (options.output_dir) {
    std::ofstream(*options.output_dir / "report.txt") << report.to_text();
    std::ofstream(*options.output_dir / "report.json") << report.to_json() << '\n';
  }
  return report;
}

}  // namespace synth
