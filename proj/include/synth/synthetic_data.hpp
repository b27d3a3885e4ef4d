#pragma once

// Gaussian-blob stand-in for an image dataset, with designated overlapping class
// pairs and underrepresented classes.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "synth/dataset.hpp"

namespace synth {

struct SyntheticDataConfig {
  std::size_t n_classes = 10;
  std::size_t feature_dim = 16;
  std::size_t samples_per_class = 200;
  double class_sigma = 1.0;
  double centroid_distance = 4.0;  // pairwise, in units of sigma
  std::vector<std::pair<std::size_t, std::size_t>> overlap_pairs;
  double overlap_distance = 1.0;  // in units of sigma
  std::vector<std::size_t> minority_classes;
  double minority_fraction = 0.25;  // applied to the training share only
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;

  void validate() const;
};

struct SyntheticWorld {
  DatasetSplits splits;
  std::vector<std::vector<double>> centroids;
  std::vector<double> class_sigma;
};

// Stratified per-class split; fully determined by (config, seed).
SyntheticWorld make_synthetic_dataset(const SyntheticDataConfig& config, std::uint64_t seed);

}  // namespace synth
