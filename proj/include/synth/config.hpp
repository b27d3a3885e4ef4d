#pragma once

// Run configuration, loaded from TOML.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synth/environment.hpp"
#include "synth/generator.hpp"
#include "synth/ppo.hpp"
#include "synth/prompt_space.hpp"
#include "synth/synthetic_data.hpp"

namespace synth {

enum class BackendKind { kSimulated, kRemote };

struct GeneratorSettings {
  BackendKind backend = BackendKind::kSimulated;
  RemoteConfig remote;
  std::array<double, kClassSlots> slot_weights{0.6, 0.25, 0.15};
  std::vector<double> domain_noise;  // empty: 1.0 everywhere except `noisy_domain`
  std::optional<std::size_t> noisy_domain;  // defaults to the last domain
  double noisy_multiplier = 1.5;

  std::vector<double> resolved_domain_noise(std::size_t domain_count) const;
};

struct TrainingSettings {
  std::size_t total_updates = 50;
  std::size_t episodes_per_update = 8;
  std::size_t threads = 1;
  std::size_t hidden = 64;
};

struct RunConfig {
  std::vector<std::string> domains{"photograph", "painting", "still-life", "image", "digital image"};
  std::vector<std::string> classes;

  SyntheticDataConfig data;
  std::optional<std::filesystem::path> data_dir;  // load splits instead of synthesizing

  std::size_t images_per_step = 10;
  std::size_t budget = 400;
  TrainerConfig classifier{0.5, 300, 0.0, 0, 0.01};
  std::size_t step_epochs = 30;
  bool warm_start = true;

  PpoConfig ppo;
  TrainingSettings training;
  GeneratorSettings generator;

  bool random_baseline_randomizes_domain = true;

  std::uint64_t seed = 0;
  std::size_t seeds = 5;
  std::filesystem::path output_dir = "synth-out";

  Dictionary dictionary() const { return Dictionary(domains, classes); }
  EnvConfig env_config(std::uint64_t run_seed) const;

  // Throws kConfig on any inconsistency.
  void validate() const;

  // FNV-1a over a canonical rendering of every field; stored in checkpoints.
  std::uint64_t hash() const;
  std::string canonical() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir = {});

}  // namespace synth
