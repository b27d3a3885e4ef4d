#include "synth/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "synth/error.hpp"
#include "synth/rng.hpp"

namespace synth {

namespace {

struct ClassCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

ClassCounts counts_for(const SyntheticDataConfig& cfg, std::size_t cls) {
  ClassCounts c;
  const double n = static_cast<double>(cfg.samples_per_class);
  c.val = static_cast<std::size_t>(std::llround(n * cfg.val_fraction));
  c.test = static_cast<std::size_t>(std::llround(n * cfg.test_fraction));
  c.train = cfg.samples_per_class - std::min(cfg.samples_per_class, c.val + c.test);
  if (std::find(cfg.minority_classes.begin(), cfg.minority_classes.end(), cls) != cfg.minority_classes.end()) {
    c.train = static_cast<std::size_t>(std::llround(static_cast<double>(c.train) * cfg.minority_fraction));
  }
  return c;
}

std::vector<double> random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : u) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

}  // namespace

void SyntheticDataConfig::validate() const {
  if (n_classes == 0 || feature_dim == 0 || samples_per_class == 0) {
    throw Error(ErrorKind::kConfig, "synthetic data: classes, dimension and per-class count must be positive");
  }
  if (!(class_sigma > 0.0) || !(centroid_distance >= 0.0) || !(overlap_distance >= 0.0)) {
    throw Error(ErrorKind::kConfig, "synthetic data: sigma must be > 0 and distances >= 0");
  }
  const double total = train_fraction + val_fraction + test_fraction;
  if (train_fraction <= 0.0 || val_fraction <= 0.0 || test_fraction <= 0.0 || std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::kConfig, "synthetic data: split fractions must be positive and sum to 1");
  }
  if (!(minority_fraction > 0.0 && minority_fraction <= 1.0)) {
    throw Error(ErrorKind::kConfig, "synthetic data: minority fraction must lie in (0, 1]");
  }
  std::vector<bool> paired(n_classes, false);
  for (const auto& [a, b] : overlap_pairs) {
    if (a >= n_classes || b >= n_classes || a == b) {
      throw Error(ErrorKind::kConfig, "synthetic data: invalid overlap pair");
    }
    if (paired[b]) throw Error(ErrorKind::kConfig, "synthetic data: a class is the second member of two pairs");
    paired[b] = true;
  }
  for (std::size_t c : minority_classes) {
    if (c >= n_classes) throw Error(ErrorKind::kConfig, "synthetic data: minority class out of range");
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto counts = counts_for(*this, c);
    if (counts.train == 0 || counts.val == 0 || counts.test == 0) {
      throw Error(ErrorKind::kConfig, "synthetic data: class " + std::to_string(c) +
                                          " would have an empty train, validation or test split");
    }
  }
}

SyntheticWorld make_synthetic_dataset(const SyntheticDataConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.n_classes;
  const std::size_t d = config.feature_dim;

  // Centroids on a sphere of radius D/sqrt(2); when n <= d they are made mutually
  // orthogonal so every pairwise distance is exactly D.
  Rng layout_rng(derive_seed({seed, 0x63656e74ULL}));
  std::vector<std::vector<double>> directions;
  for (std::size_t c = 0; c < n; ++c) {
    auto u = random_unit(d, layout_rng);
    if (n <= d) {
      for (const auto& prev : directions) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += u[j] * prev[j];
        for (std::size_t j = 0; j < d; ++j) u[j] -= dot * prev[j];
      }
      double norm = 0.0;
      for (double v : u) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : u) v /= norm;
    }
    directions.push_back(std::move(u));
  }
  const double radius = config.centroid_distance * config.class_sigma / std::sqrt(2.0);
  std::vector<std::vector<double>> centroids(n, std::vector<double>(d));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < d; ++j) centroids[c][j] = radius * directions[c][j];
  }
  for (const auto& [a, b] : config.overlap_pairs) {
    const auto u = random_unit(d, layout_rng);
    for (std::size_t j = 0; j < d; ++j) {
      centroids[b][j] = centroids[a][j] + config.overlap_distance * config.class_sigma * u[j];
    }
  }

  std::vector<LabeledSample> train;
  std::vector<LabeledSample> val;
  std::vector<LabeledSample> test;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng(derive_seed({seed, 0x73616d70ULL, c}));
    const auto counts = counts_for(config, c);
    auto draw = [&] {
      LabeledSample s;
      s.label = c;
      s.features.resize(d);
      for (std::size_t j = 0; j < d; ++j) s.features[j] = centroids[c][j] + config.class_sigma * normal(rng);
      return s;
    };
    for (std::size_t i = 0; i < counts.train; ++i) train.push_back(draw());
    for (std::size_t i = 0; i < counts.val; ++i) val.push_back(draw());
    for (std::size_t i = 0; i < counts.test; ++i) test.push_back(draw());
  }

  SyntheticWorld world{DatasetSplits(n, d, std::move(train), std::move(val), std::move(test)),
                       std::move(centroids), std::vector<double>(n, config.class_sigma)};
  return world;
}

}  // namespace synth
