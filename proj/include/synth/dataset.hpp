#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synth {

enum class Provenance { kReal, kSynthetic };

struct LabeledSample {
  std::vector<double> features;
  std::size_t label = 0;
  Provenance provenance = Provenance::kReal;
  std::optional<std::size_t> prompt_id;  // index into SupportSet::records for synthetic samples
};

// D / V / T. The test split sits behind an accessor that counts reads so tests can
// assert that nothing but final evaluation ever touches it.
class DatasetSplits {
 public:
  DatasetSplits() = default;
  DatasetSplits(std::size_t n_classes, std::size_t feature_dim, std::vector<LabeledSample> train,
                std::vector<LabeledSample> val, std::vector<LabeledSample> test);

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const std::vector<LabeledSample>& train() const noexcept { return train_; }
  const std::vector<LabeledSample>& val() const noexcept { return val_; }
  const std::vector<LabeledSample>& test() const;

  std::uint64_t test_reads() const noexcept { return test_reads_->load(); }

 private:
  std::size_t n_classes_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<LabeledSample> train_;
  std::vector<LabeledSample> val_;
  std::vector<LabeledSample> test_;
  std::shared_ptr<std::atomic<std::uint64_t>> test_reads_ =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

// Throws kInvalidInput on a wrong dimension or out-of-range label.
void validate_samples(std::span<const LabeledSample> samples, std::size_t n_classes,
                      std::size_t feature_dim);

// Header "n_classes=<n>,dim=<d>", then one "label,f1,...,fd" record per line.
// Values are written with 17 significant digits so they read back bit-identically.
void write_dataset(const std::filesystem::path& path, std::span<const LabeledSample> samples,
                   std::size_t n_classes, std::size_t feature_dim);

struct DatasetFile {
  std::size_t n_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<LabeledSample> samples;
};

DatasetFile read_dataset(const std::filesystem::path& path);

// train.csv / val.csv / test.csv under `dir`.
void write_splits(const std::filesystem::path& dir, const DatasetSplits& splits);
DatasetSplits read_splits(const std::filesystem::path& dir);

std::string format_double(double value);

}  // namespace synth
