#pragma once

// End-to-end driver: exploration episodes, PPO rounds, greedy finalization,
// baselines and the pretrained / random-synthesis / RL comparison.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "synth/config.hpp"
#include "synth/environment.hpp"
#include "synth/generator.hpp"
#include "synth/policy.hpp"
#include "synth/ppo.hpp"

namespace synth {

struct RunWorld {
  Dictionary dictionary;
  std::shared_ptr<const DatasetSplits> splits;
  SimulatorSpec simulator;
};

// Synthesizes the dataset for `seed`, or loads `data_dir` and fits the simulator to
// per-class training means and spreads.
RunWorld build_world(const RunConfig& config, std::uint64_t seed);
std::unique_ptr<Generator> make_generator(const RunConfig& config, const RunWorld& world);
PolicyShape policy_shape(const RunConfig& config);

struct Episode {
  Trajectory trajectory;
  std::vector<EvalReport> reports;  // validation report after each step
  double total_reward = 0.0;
};

// Samples from the frozen policy until the budget is spent.
Episode run_episode(const PolicyParams& policy, Environment& env, Rng& rng);
// Per-slot argmax, no sampling.
Episode run_greedy_episode(const PolicyParams& policy, Environment& env);
// Uniform random actions; the comparison oracle for training progress.
Episode run_random_episode(Environment& env, Rng& rng, bool randomize_domain = true);
// Replays a fixed action list.
Episode run_scripted_episode(Environment& env, const std::vector<PromptAction>& actions);

struct UpdateLog {
  std::size_t update = 0;
  double mean_episode_reward = 0.0;
  std::vector<double> episode_rewards;
  UpdateStats stats;
};

struct TrainOptions {
  std::ostream* metrics = nullptr;  // JSON lines
  std::optional<std::filesystem::path> checkpoint_path;
};

struct TrainResult {
  PolicyParams params;
  std::vector<UpdateLog> log;
};

TrainResult train_agent(const RunConfig& config, std::shared_ptr<const EnvironmentContext> context,
                        Generator& generator, std::uint64_t seed, const TrainOptions& options = {});

struct Finalized {
  SupportSet support;
  Episode episode;
};

Finalized finalize_support_set(const PolicyParams& params, std::shared_ptr<const EnvironmentContext> context,
                               Generator& generator);

// Fresh model trained on D + S with the pretraining schedule, scored on T.
double final_test_accuracy(const EnvironmentContext& context, const SupportSet& support);

enum class BaselineMode { kNone, kRandom };

struct BaselineResult {
  double test_accuracy = 0.0;
  SupportSet support;
};

BaselineResult run_baseline(BaselineMode mode, const RunConfig& config,
                            std::shared_ptr<const EnvironmentContext> context, Generator& generator,
                            std::uint64_t seed);

// Sample file, per-sample sidecar and replay manifest for a support set.
struct SupportSetFiles {
  std::filesystem::path samples;
  std::filesystem::path sidecar;
  std::filesystem::path manifest;
};

SupportSetFiles write_support_set(const std::filesystem::path& dir, const SupportSet& support,
                                  const RunWorld& world, const RunConfig& config, std::uint64_t seed);

struct ReplayResult {
  SupportSet support;
  std::size_t n_classes = 0;
  std::size_t feature_dim = 0;
  std::filesystem::path samples_file;
  bool matches_samples_file = false;  // bit-identical against the stored samples
};

// Regenerates S from the manifest with the simulator it records.
ReplayResult replay_manifest(const std::filesystem::path& manifest_path);

struct SeedRow {
  std::uint64_t seed = 0;
  std::optional<double> pretrained;
  std::optional<double> rand_syn;
  std::optional<double> ours;
  std::vector<std::string> errors;
  std::string manifest;
  double seconds = 0.0;
};

struct SettingSummary {
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t count = 0;
};

struct RunReport {
  std::vector<SeedRow> rows;
  SettingSummary pretrained;
  SettingSummary rand_syn;
  SettingSummary ours;
  double total_seconds = 0.0;

  std::string to_text() const;
  std::string to_json() const;
  void summarize();
};

struct CompareOptions {
  std::optional<std::filesystem::path> output_dir;
  std::ostream* progress = nullptr;
};

RunReport compare_and_report(const RunConfig& config, const CompareOptions& options = {});

}  // namespace synth
