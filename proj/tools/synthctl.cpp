// synthctl: command-line driver for prompt-controlled support-set synthesis.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "synth/config.hpp"
#include "synth/error.hpp"
#include "synth/orchestrator.hpp"

namespace {

namespace fs = std::filesystem;

synth::RunConfig load(const std::string& path, const std::optional<std::uint64_t>& seed,
                      const std::optional<std::string>& out) {
  auto config = synth::load_config(path);
  if (seed) config.seed = *seed;
  if (out) config.output_dir = *out;
  return config;
}

int cmd_run(const synth::RunConfig& config) {
  synth::CompareOptions options;
  options.output_dir = config.output_dir;
  options.progress = &std::cerr;
  const auto report = synth::compare_and_report(config, options);
  std::cout << report.to_text();
  std::cout << "report written to " << (config.output_dir / "report.json").string() << '\n';
  for (const auto& row : report.rows) {
    if (!row.errors.empty()) return 3;
  }
  return 0;
}

int cmd_baseline(const synth::RunConfig& config, const std::string& mode_name) {
  const auto mode = mode_name == "random" ? synth::BaselineMode::kRandom : synth::BaselineMode::kNone;
  const auto world = synth::build_world(config, config.seed);
  auto generator = synth::make_generator(config, world);
  auto context = synth::make_environment_context(world.dictionary, world.splits, config.env_config(config.seed));
  const auto result = synth::run_baseline(mode, config, context, *generator, config.seed);
  std::cout << (mode == synth::BaselineMode::kRandom ? "rand_syn" : "pretrained") << " seed=" << config.seed
            << " test_accuracy=" << result.test_accuracy << '\n';
  if (mode == synth::BaselineMode::kRandom) {
    const auto dir = config.output_dir / ("baseline_random_seed_" + std::to_string(config.seed));
    const auto files = synth::write_support_set(dir, result.support, world, config, config.seed);
    std::cout << "manifest: " << files.manifest.string() << '\n';
  }
  return 0;
}

int cmd_make_data(const synth::RunConfig& config) {
  if (config.data_dir) throw synth::Error(synth::ErrorKind::kConfig, "make-data needs a synthetic [data] section, not data.dir");
  const auto world = synth::build_world(config, config.seed);
  const auto dir = config.output_dir / "data";
  synth::write_splits(dir, *world.splits);
  std::cout << "wrote " << world.splits->train().size() << '/' << world.splits->val().size() << '/'
            << world.splits->test().size() << " samples to " << dir.string() << '\n';
  return 0;
}

int cmd_enumerate(const synth::RunConfig& config, std::optional<std::uint64_t> limit) {
  const auto dict = config.dictionary();
  const std::uint64_t total = synth::action_space_size(dict);
  const std::uint64_t shown = limit ? std::min(*limit, total) : total;
  for (std::uint64_t i = 0; i < shown; ++i) {
    std::cout << i << '\t' << synth::format_prompt(dict, synth::action_of_index(dict, i)).text << '\n';
  }
  std::cerr << shown << " of " << total << " actions\n";
  return 0;
}

int cmd_replay(const std::string& manifest, const std::optional<std::string>& out) {
  const auto result = synth::replay_manifest(manifest);
  std::cout << "replayed " << result.support.size() << " samples from " << result.support.records().size()
            << " prompts\n";
  if (out) {
    synth::write_dataset(*out, result.support.samples(), result.n_classes, result.feature_dim);
    std::cout << "wrote " << *out << '\n';
  }
  if (fs::exists(result.samples_file)) {
    std::cout << "samples file " << result.samples_file.string() << ": "
              << (result.matches_samples_file ? "identical" : "MISMATCH") << '\n';
    return result.matches_samples_file ? 0 : 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt-controlled synthetic support-set builder"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string mode = "none";
  std::optional<std::uint64_t> limit;
  std::string manifest;

  auto* run = app.add_subcommand("run", "RL training, greedy finalization and the three-way report");
  run->add_option("--config", config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out, "output directory");

  auto* baseline = app.add_subcommand("baseline", "pretrained-only or random-synthesis baseline");
  baseline->add_option("--mode", mode, "none | random")->check(CLI::IsMember({"none", "random"}));
  baseline->add_option("--config", config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
  baseline->add_option("--seed", seed, "master seed");
  baseline->add_option("--out", out, "output directory");

  auto* make_data = app.add_subcommand("make-data", "write the synthetic dataset splits");
  make_data->add_option("--config", config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
  make_data->add_option("--seed", seed, "master seed");
  make_data->add_option("--out", out, "output directory");

  auto* enumerate = app.add_subcommand("enumerate-actions", "list prompts with their flat indices");
  enumerate->add_option("--config", config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
  enumerate->add_option("--limit", limit, "print at most K actions");

  auto* replay = app.add_subcommand("replay", "regenerate a support set from its manifest");
  replay->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out, "write regenerated samples here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(load(config_path, seed, out));
    if (*baseline) return cmd_baseline(load(config_path, seed, out), mode);
    if (*make_data) return cmd_make_data(load(config_path, seed, out));
    if (*enumerate) return cmd_enumerate(load(config_path, std::nullopt, std::nullopt), limit);
    if (*replay) return cmd_replay(manifest, out);
  } catch (const synth::Error& e) {
    std::cerr << "error (" << synth::to_string(e.kind()) << "): " << e.what() << '\n';
    return synth::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
