#include "synth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "synth/dataset.hpp"
#include "synth/error.hpp"

namespace synth {

std::vector<double> GeneratorSettings::resolved_domain_noise(std::size_t domain_count) const {
  if (!domain_noise.empty()) {
    if (domain_noise.size() != domain_count) {
      throw Error(ErrorKind::kConfig, "generator.domain_noise needs one entry per domain");
    }
    return domain_noise;
  }
  std::vector<double> out(domain_count, 1.0);
  const std::size_t noisy = noisy_domain.value_or(domain_count - 1);
  if (noisy >= domain_count) throw Error(ErrorKind::kConfig, "generator.noisy_domain out of range");
  out[noisy] = noisy_multiplier;
  return out;
}

EnvConfig RunConfig::env_config(std::uint64_t run_seed) const {
  EnvConfig env;
  env.images_per_step = images_per_step;
  env.budget = budget;
  env.pretrain = classifier;
  env.pretrain.seed = derive_seed({run_seed, 0x6d6f64656cULL});
  env.step = env.pretrain;
  env.step.epochs = step_epochs;
  env.warm_start = warm_start;
  env.run_seed = run_seed;
  return env;
}

void RunConfig::validate() const {
  const Dictionary dict = dictionary();
  if (!data_dir) {
    if (data.n_classes != dict.class_count()) {
      throw Error(ErrorKind::kConfig, "data.n_classes must equal the number of dictionary classes");
    }
    data.validate();
  }
  env_config(seed).validate();
  if (!(ppo.epsilon > 0.0)) throw Error(ErrorKind::kConfig, "ppo.epsilon must be > 0");
  if (ppo.gamma < 0.0 || ppo.gamma > 1.0 || ppo.lambda < 0.0 || ppo.lambda > 1.0) {
    throw Error(ErrorKind::kConfig, "ppo.gamma and ppo.lambda must lie in [0, 1]");
  }
  if (!(ppo.learning_rate > 0.0) || ppo.minibatch_size == 0) {
    throw Error(ErrorKind::kConfig, "ppo.learning_rate and ppo.minibatch_size must be positive");
  }
  if (training.episodes_per_update == 0 || training.threads == 0 || training.hidden == 0) {
    throw Error(ErrorKind::kConfig, "training counts must be positive");
  }
  if (seeds == 0) throw Error(ErrorKind::kConfig, "run.seeds must be positive");
  if (!(classifier.learning_rate > 0.0)) throw Error(ErrorKind::kConfig, "classifier.learning_rate must be > 0");
  if (generator.backend == BackendKind::kRemote && generator.remote.endpoint.empty()) {
    throw Error(ErrorKind::kConfig, "generator.endpoint is required for the remote backend");
  }
  generator.resolved_domain_noise(dict.domain_count());
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  auto list = [&](const char* key, const auto& values) {
    out << key << '=';
    for (const auto& v : values) out << v << '|';
    out << '\n';
  };
  list("domains", domains);
  list("classes", classes);
  out << "data=" << data.n_classes << ',' << data.feature_dim << ',' << data.samples_per_class << ','
      << format_double(data.class_sigma) << ',' << format_double(data.centroid_distance) << ','
      << format_double(data.overlap_distance) << ',' << format_double(data.minority_fraction) << ','
      << format_double(data.train_fraction) << ',' << format_double(data.val_fraction) << ','
      << format_double(data.test_fraction) << '\n';
  out << "overlap=";
  for (const auto& [a, b] : data.overlap_pairs) out << a << '-' << b << '|';
  out << '\n';
  list("minority", data.minority_classes);
  out << "data_dir=" << (data_dir ? data_dir->string() : "") << '\n';
  out << "episode=" << images_per_step << ',' << budget << '\n';
  out << "classifier=" << format_double(classifier.learning_rate) << ',' << classifier.epochs << ','
      << format_double(classifier.l2) << ',' << format_double(classifier.init_scale) << ',' << step_epochs
      << ',' << warm_start << '\n';
  out << "ppo=" << format_double(ppo.epsilon) << ',' << format_double(ppo.gamma) << ','
      << format_double(ppo.lambda) << ',' << format_double(ppo.learning_rate) << ','
      << format_double(ppo.beta1) << ',' << format_double(ppo.beta2) << ','
      << format_double(ppo.adam_epsilon) << ',' << ppo.epochs << ',' << ppo.minibatch_size << ','
      << format_double(ppo.value_coef) << ',' << format_double(ppo.entropy_coef) << ','
      << ppo.normalize_advantages << '\n';
  out << "training=" << training.total_updates << ',' << training.episodes_per_update << ','
      << training.hidden << '\n';
  out << "generator=" << (generator.backend == BackendKind::kRemote ? "remote" : "simulated") << ','
      << generator.remote.endpoint << ',' << format_double(generator.slot_weights[0]) << ','
      << format_double(generator.slot_weights[1]) << ',' << format_double(generator.slot_weights[2]) << '\n';
  list("domain_noise", generator.resolved_domain_noise(domains.size()));
  out << "baseline=" << random_baseline_randomizes_domain << '\n';
  out << "seed=" << seed << ',' << seeds << '\n';
  return out.str();
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::kConfig, "config key '" + key + "': " + what);
}

template <typename T>
void read_number(const toml::table& t, const std::string& key, T& out) {
  const auto node = t.at_path(key);
  if (!node) return;
  if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node.value<double>()) {
      out = static_cast<T>(*v);
      return;
    }
    bad(key, "expected a number");
  } else {
    auto v = node.value<std::int64_t>();
    if (!v || !node.is_integer()) bad(key, "expected an integer");
    if (*v < 0) bad(key, "must be non-negative");
    out = static_cast<T>(*v);
  }
}

void read_bool(const toml::table& t, const std::string& key, bool& out) {
  const auto node = t.at_path(key);
  if (!node) return;
  if (!node.is_boolean()) bad(key, "expected a boolean");
  out = *node.value<bool>();
}

void read_string(const toml::table& t, const std::string& key, std::string& out) {
  const auto node = t.at_path(key);
  if (!node) return;
  if (!node.is_string()) bad(key, "expected a string");
  out = *node.value<std::string>();
}

std::vector<std::string> read_string_list(const toml::table& t, const std::string& key) {
  std::vector<std::string> out;
  const auto node = t.at_path(key);
  if (!node) return out;
  const auto* arr = node.as_array();
  if (!arr) bad(key, "expected an array of strings");
  for (const auto& el : *arr) {
    auto s = el.value<std::string>();
    if (!s || !el.is_string()) bad(key, "expected an array of strings");
    out.push_back(*s);
  }
  return out;
}

template <typename T>
std::optional<std::vector<T>> read_number_list(const toml::table& t, const std::string& key) {
  const auto node = t.at_path(key);
  if (!node) return std::nullopt;
  const auto* arr = node.as_array();
  if (!arr) bad(key, "expected an array of numbers");
  std::vector<T> out;
  for (const auto& el : *arr) {
    if constexpr (std::is_floating_point_v<T>) {
      auto v = el.value<double>();
      if (!v) bad(key, "expected an array of numbers");
      out.push_back(*v);
    } else {
      auto v = el.value<std::int64_t>();
      if (!v || !el.is_integer() || *v < 0) bad(key, "expected an array of non-negative integers");
      out.push_back(static_cast<T>(*v));
    }
  }
  return out;
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
    "baseline.randomize_domain",
    "classifier.init_scale",
    "classifier.l2",
    "classifier.learning_rate",
    "classifier.pretrain_epochs",
    "classifier.step_epochs",
    "classifier.warm_start",
    "data.centroid_distance",
    "data.class_sigma",
    "data.dir",
    "data.feature_dim",
    "data.minority_classes",
    "data.minority_fraction",
    "data.overlap_distance",
    "data.overlap_pairs",
    "data.samples_per_class",
    "data.split",
    "dictionary.classes",
    "dictionary.domains",
    "episode.budget",
    "episode.images_per_step",
    "generator.backend",
    "generator.domain_noise",
    "generator.endpoint",
    "generator.noisy_domain",
    "generator.noisy_multiplier",
    "generator.retries",
    "generator.slot_weights",
    "generator.timeout_seconds",
    "ppo.beta1",
    "ppo.beta2",
    "ppo.entropy_coef",
    "ppo.epochs",
    "ppo.epsilon",
    "ppo.gamma",
    "ppo.lambda",
    "ppo.learning_rate",
    "ppo.minibatch_size",
    "ppo.normalize_advantages",
    "ppo.value_coef",
    "run.output_dir",
    "run.seed",
    "run.seeds",
    "training.episodes_per_update",
    "training.hidden",
    "training.threads",
    "training.total_updates",
  };
  return keys;
}

// Misspelled keys would otherwise be ignored silently.
void reject_unknown_keys(const toml::table& t) {
  for (const auto& [section, node] : t) {
    const std::string name(section.str());
    const auto* table = node.as_table();
    if (!table) bad(name, "expected a [section]");
    for (const auto& [key, value] : *table) {
      const std::string full = name + "." + std::string(key.str());
      if (!known_keys().contains(full)) bad(full, "unknown key");
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir) {
  toml::table t;
  try {
    t = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorKind::kConfig, msg.str());
  }

  reject_unknown_keys(t);

  RunConfig cfg;
  if (auto d = read_string_list(t, "dictionary.domains"); !d.empty()) cfg.domains = std::move(d);
  cfg.classes = read_string_list(t, "dictionary.classes");
  if (cfg.classes.empty()) bad("dictionary.classes", "required and must be non-empty");
  cfg.data.n_classes = cfg.classes.size();

  read_number(t, "data.feature_dim", cfg.data.feature_dim);
  read_number(t, "data.samples_per_class", cfg.data.samples_per_class);
  read_number(t, "data.class_sigma", cfg.data.class_sigma);
  read_number(t, "data.centroid_distance", cfg.data.centroid_distance);
  read_number(t, "data.overlap_distance", cfg.data.overlap_distance);
  read_number(t, "data.minority_fraction", cfg.data.minority_fraction);
  if (auto split = read_number_list<double>(t, "data.split")) {
    if (split->size() != 3) bad("data.split", "expected [train, val, test]");
    cfg.data.train_fraction = (*split)[0];
    cfg.data.val_fraction = (*split)[1];
    cfg.data.test_fraction = (*split)[2];
  }
  if (auto minority = read_number_list<std::size_t>(t, "data.minority_classes")) {
    cfg.data.minority_classes = *minority;
  }
  if (const auto node = t.at_path("data.overlap_pairs")) {
    const auto* arr = node.as_array();
    if (!arr) bad("data.overlap_pairs", "expected an array of [a, b] pairs");
    for (const auto& el : *arr) {
      const auto* pair = el.as_array();
      if (!pair || pair->size() != 2) bad("data.overlap_pairs", "expected an array of [a, b] pairs");
      auto a = (*pair)[0].value<std::int64_t>();
      auto b = (*pair)[1].value<std::int64_t>();
      if (!a || !b || *a < 0 || *b < 0) bad("data.overlap_pairs", "pair members must be class indices");
      cfg.data.overlap_pairs.emplace_back(static_cast<std::size_t>(*a), static_cast<std::size_t>(*b));
    }
  }
  std::string data_dir;
  read_string(t, "data.dir", data_dir);
  if (!data_dir.empty()) {
    std::filesystem::path p(data_dir);
    cfg.data_dir = p.is_absolute() ? p : base_dir / p;
  }

  read_number(t, "episode.images_per_step", cfg.images_per_step);
  read_number(t, "episode.budget", cfg.budget);

  read_number(t, "classifier.learning_rate", cfg.classifier.learning_rate);
  read_number(t, "classifier.pretrain_epochs", cfg.classifier.epochs);
  read_number(t, "classifier.step_epochs", cfg.step_epochs);
  read_number(t, "classifier.l2", cfg.classifier.l2);
  read_number(t, "classifier.init_scale", cfg.classifier.init_scale);
  read_bool(t, "classifier.warm_start", cfg.warm_start);

  read_number(t, "ppo.epsilon", cfg.ppo.epsilon);
  read_number(t, "ppo.gamma", cfg.ppo.gamma);
  read_number(t, "ppo.lambda", cfg.ppo.lambda);
  read_number(t, "ppo.learning_rate", cfg.ppo.learning_rate);
  read_number(t, "ppo.beta1", cfg.ppo.beta1);
  read_number(t, "ppo.beta2", cfg.ppo.beta2);
  read_number(t, "ppo.epochs", cfg.ppo.epochs);
  read_number(t, "ppo.minibatch_size", cfg.ppo.minibatch_size);
  read_number(t, "ppo.value_coef", cfg.ppo.value_coef);
  read_number(t, "ppo.entropy_coef", cfg.ppo.entropy_coef);
  read_bool(t, "ppo.normalize_advantages", cfg.ppo.normalize_advantages);

  read_number(t, "training.total_updates", cfg.training.total_updates);
  read_number(t, "training.episodes_per_update", cfg.training.episodes_per_update);
  read_number(t, "training.threads", cfg.training.threads);
  read_number(t, "training.hidden", cfg.training.hidden);

  std::string backend = "simulated";
  read_string(t, "generator.backend", backend);
  if (backend == "simulated") {
    cfg.generator.backend = BackendKind::kSimulated;
  } else if (backend == "remote") {
    cfg.generator.backend = BackendKind::kRemote;
  } else {
    bad("generator.backend", "expected \"simulated\" or \"remote\"");
  }
  read_string(t, "generator.endpoint", cfg.generator.remote.endpoint);
  read_number(t, "generator.timeout_seconds", cfg.generator.remote.timeout_seconds);
  read_number(t, "generator.retries", cfg.generator.remote.retries);
  if (auto w = read_number_list<double>(t, "generator.slot_weights")) {
    if (w->size() != kClassSlots) bad("generator.slot_weights", "expected three weights");
    std::copy(w->begin(), w->end(), cfg.generator.slot_weights.begin());
  }
  if (auto noise = read_number_list<double>(t, "generator.domain_noise")) cfg.generator.domain_noise = *noise;
  if (t.at_path("generator.noisy_domain")) {
    std::size_t noisy = 0;
    read_number(t, "generator.noisy_domain", noisy);
    cfg.generator.noisy_domain = noisy;
  }
  read_number(t, "generator.noisy_multiplier", cfg.generator.noisy_multiplier);

  read_bool(t, "baseline.randomize_domain", cfg.random_baseline_randomizes_domain);

  read_number(t, "run.seed", cfg.seed);
  read_number(t, "run.seeds", cfg.seeds);
  std::string out_dir;
  read_string(t, "run.output_dir", out_dir);
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace synth
