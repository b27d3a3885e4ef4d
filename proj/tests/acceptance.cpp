// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.
//   acceptance [--desk-config PATH] [--skip-desk] [--out DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "synth/classifier.hpp"
#include "synth/config.hpp"
#include "synth/environment.hpp"
#include "synth/orchestrator.hpp"
#include "synth/prompt_space.hpp"
#include "synth/synthetic_data.hpp"

using namespace synth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-34s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* kSmallWorld = R"(
[dictionary]
domains = ["photograph", "painting"]
classes = ["a", "b", "c", "d", "e"]
[data]
feature_dim = 8
samples_per_class = 60
overlap_pairs = [[0, 1]]
minority_classes = [4]
split = [0.5, 0.25, 0.25]
[episode]
images_per_step = 10
budget = 100
[classifier]
pretrain_epochs = 100
step_epochs = 10
[training]
total_updates = 3
episodes_per_update = 4
)";

Outcome entropy_exactness() {
  const double uniform = entropy_of(std::vector<double>(10, 0.1));
  std::vector<double> onehot(10, 0.0);
  onehot[0] = 1.0;
  const double zero = entropy_of(onehot);
  const double two = entropy_of(std::vector<double>{0.5, 0.5});
  const double e1 = std::abs(uniform - std::log(10.0));
  const double e2 = std::abs(zero);
  const double e3 = std::abs(two - std::log(2.0));
  return {e1 <= 1e-9 && e2 <= 1e-9 && e3 <= 1e-9,
          fmt("|H(u10)-ln10|=%.1e |H(onehot)|=%.1e |H(.5,.5)-ln2|=%.1e", e1, e2, e3)};
}

Outcome reward_properties() {
  const auto cfg = parse_config(kSmallWorld);
  double worst_antisym = 0.0, worst_telescope = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto world = build_world(cfg, seed);
    auto gen = make_generator(cfg, world);
    auto ctx = make_environment_context(world.dictionary, world.splits, cfg.env_config(seed));
    Environment env(ctx, *gen);
    Rng rng(seed);
    for (int ep = 0; ep < 4; ++ep) {
      const auto episode = run_random_episode(env, rng);
      double sum = 0.0;
      EvalReport before = ctx->pretrained_report;
      for (std::size_t i = 0; i < episode.trajectory.size(); ++i) {
        sum += episode.trajectory[i].reward;
        const auto& after = episode.reports[i];
        worst_antisym = std::max(worst_antisym, std::abs(compute_reward(before, after) + compute_reward(after, before)));
        before = after;
      }
      const auto& last = episode.reports.back();
      const auto& pre = ctx->pretrained_report;
      const double direct = (last.accuracy - pre.accuracy) - (last.mean_entropy - pre.mean_entropy);
      worst_telescope = std::max(worst_telescope, std::abs(sum - direct));
    }
  }
  return {worst_antisym <= 1e-9 && worst_telescope <= 1e-9,
          fmt("max antisymmetry error %.1e, max telescoping error %.1e over 20 episodes", worst_antisym,
              worst_telescope)};
}

Outcome clip_cases() {
  const PolicyShape shape{3, 4, 2, 3};
  const auto params = PolicyParams::initialize(shape, 1);
  PpoConfig config;
  config.value_coef = 0.0;
  auto surrogate = [&](double ratio, double adv) {
    Transition t;
    t.state = {0.2, 0.4, -0.3};
    t.action = {0, {1, 2, 0}};
    const auto out = policy_forward(params, t.state);
    t.log_prob = action_log_prob(out.heads, t.action) - std::log(ratio);
    const std::vector<Transition> batch{t};
    const std::vector<double> a{adv}, r{0.0};
    return -ppo_loss(params, batch, a, r, config).policy_loss;
  };
  const double s1 = surrogate(1.0, 2.0), s2 = surrogate(1.5, 2.0), s3 = surrogate(0.5, -1.0);
  const bool ok = std::abs(s1 - 2.0) <= 1e-12 && std::abs(s2 - 2.4) <= 1e-12 && std::abs(s3 + 0.8) <= 1e-12;
  return {ok, fmt("L(1,2)=%.12g L(1.5,2)=%.12g L(0.5,-1)=%.12g", s1, s2, s3)};
}

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, oracle::ppo_gradient_check(seed));
  return {worst <= 1e-4, fmt("max relative error %.2e over 100 batches (2 hidden units)", worst)};
}

Outcome gae_oracle() {
  Rng rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 60);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(len(rng)), v(r.size());
    for (double& x : r) x = normal(rng);
    for (double& x : v) x = normal(rng);
    const auto est = compute_gae(oracle::make_trajectory(r, v), 1.0, 1.0);
    const auto expect = oracle::discounted_advantage(r, v, 1.0);
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(est.advantages[i] - expect[i]));
  }
  return {worst <= 1e-12, fmt("max |GAE - (reward-to-go - V)| = %.1e over 1000 trajectories", worst)};
}

Outcome bandit() {
  int ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto trace = oracle::bandit_run(seed, 200);
    std::size_t first = 0;
    while (first < trace.size() && trace[first] <= 0.9) ++first;
    if (first < trace.size()) ++ok;
    detail << (seed ? ", " : "") << "seed " << seed << ": >0.9 at update " << (first + 1);
  }
  return {ok == 5, fmt("%d/5 seeds; ", ok) + detail.str()};
}

Outcome desk_analog(const fs::path& config_path, const std::optional<fs::path>& out) {
  auto cfg = load_config(config_path);
  cfg.seed = 0;
  cfg.seeds = 5;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = compare_and_report(cfg, {out, &std::cerr});
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  int ordered = 0;
  for (const auto& row : rep.rows) {
    if (!row.errors.empty() || !row.ours || !row.rand_syn || !row.pretrained) continue;
    if (*row.ours >= *row.rand_syn && *row.rand_syn >= *row.pretrained) ++ordered;
  }
  if (!rep.ours.mean || !rep.rand_syn.mean || !rep.pretrained.mean) return {false, "missing settings in report"};
  const double pre = *rep.pretrained.mean, rnd = *rep.rand_syn.mean, ours = *rep.ours.mean;
  const bool mean_order = ours >= rnd && rnd >= pre;
  const bool gain = ours - pre >= 0.005;
  const bool per_seed = ordered >= 4;
  const bool fast = minutes < 15.0;
  std::cout << rep.to_text();
  return {mean_order && gain && per_seed && fast,
          fmt("means pre=%.4f rand=%.4f ours=%.4f; ours-pre=%+.2f pts; ordered on %d/5 seeds; %.1f min", pre, rnd,
              ours, 100 * (ours - pre), ordered, minutes)};
}

Outcome budget_and_replay() {
  const auto cfg = parse_config(kSmallWorld);
  const auto world = build_world(cfg, 7);
  auto gen = make_generator(cfg, world);
  auto ctx = make_environment_context(world.dictionary, world.splits, cfg.env_config(7));
  const auto params = train_agent(cfg, ctx, *gen, 7).params;
  const auto a = finalize_support_set(params, ctx, *gen);
  const auto b = finalize_support_set(params, ctx, *gen);
  bool same = a.support.size() == b.support.size();
  for (std::size_t i = 0; same && i < a.support.size(); ++i) {
    same = a.support.samples()[i].features == b.support.samples()[i].features &&
           a.support.records()[i / cfg.images_per_step].prompt.action ==
               b.support.records()[i / cfg.images_per_step].prompt.action;
  }
  const auto dir = fs::temp_directory_path() / "synth_acceptance_replay";
  fs::remove_all(dir);
  const auto files = write_support_set(dir, a.support, world, cfg, 7);
  const auto replay = replay_manifest(files.manifest);
  bool identical = replay.support.size() == a.support.size();
  for (std::size_t i = 0; identical && i < a.support.size(); ++i) {
    identical = replay.support.samples()[i].features == a.support.samples()[i].features &&
                replay.support.samples()[i].label == a.support.samples()[i].label;
  }
  identical = identical && replay.matches_samples_file;
  const bool exact = a.support.size() == cfg.budget;
  return {exact && same && identical,
          fmt("|S|=%zu (N_syn=%zu); greedy rerun %s; manifest replay %s", a.support.size(), cfg.budget,
              same ? "identical" : "differs", identical ? "bit-identical" : "differs")};
}

Outcome action_space() {
  const Dictionary dict({"photograph", "painting", "still-life", "image", "digital image"},
                        {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"});
  std::set<std::uint64_t> seen;
  bool bijective = true;
  for (std::uint64_t i = 0; i < action_space_size(dict); ++i) {
    seen.insert(action_index(dict, action_of_index(dict, i)));
  }
  Rng rng(99);
  for (int i = 0; i < 100000; ++i) {
    const auto a = random_action(dict, rng);
    bijective = bijective && action_of_index(dict, action_index(dict, a)) == a;
  }
  bijective = bijective && seen.size() == action_space_size(dict);
  return {bijective && action_space_size(dict) == 5000,
          fmt("count=%llu, round trip over full space and 1e5 random samples %s",
              static_cast<unsigned long long>(action_space_size(dict)), bijective ? "exact" : "broken")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string desk_config = SYNTH_DESK_CONFIG;
  std::string out_dir;
  bool skip_desk = false;
  app.add_option("--desk-config", desk_config, "config for the desk-scale comparison");
  app.add_option("--out", out_dir, "keep the desk-scale run artifacts here");
  app.add_flag("--skip-desk", skip_desk, "skip the desk-scale comparison");
  CLI11_PARSE(app, argc, argv);

  report("entropy exactness", entropy_exactness);
  report("reward antisymmetry/telescoping", reward_properties);
  report("clipped surrogate cases", clip_cases);
  report("ppo gradient vs finite diff", gradient_check);
  report("gae reward-to-go equivalence", gae_oracle);
  report("bandit convergence", bandit);
  report("budget/finalization/replay", budget_and_replay);
  report("action-space properties", action_space);
  if (!skip_desk) {
    std::optional<fs::path> out;
    if (!out_dir.empty()) out = out_dir;
    report("desk-scale comparison", [&] { return desk_analog(desk_config, out); });
  }
  std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
