#include "synth/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "synth/error.hpp"

namespace synth {

DatasetSplits::DatasetSplits(std::size_t n_classes, std::size_t feature_dim,
                             std::vector<LabeledSample> train, std::vector<LabeledSample> val,
                             std::vector<LabeledSample> test)
    : n_classes_(n_classes),
      feature_dim_(feature_dim),
      train_(std::move(train)),
      val_(std::move(val)),
      test_(std::move(test)) {
  if (n_classes_ == 0 || feature_dim_ == 0) {
    throw Error(ErrorKind::kInvalidInput, "dataset needs at least one class and one feature");
  }
  validate_samples(train_, n_classes_, feature_dim_);
  validate_samples(val_, n_classes_, feature_dim_);
  validate_samples(test_, n_classes_, feature_dim_);
}

const std::vector<LabeledSample>& DatasetSplits::test() const {
  test_reads_->fetch_add(1);
  return test_;
}

void validate_samples(std::span<const LabeledSample> samples, std::size_t n_classes,
                      std::size_t feature_dim) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.label >= n_classes) {
      throw Error(ErrorKind::kInvalidInput, "sample " + std::to_string(i) + " has label " +
                                                std::to_string(s.label) + " outside [0, " +
                                                std::to_string(n_classes) + ")");
    }
    if (s.features.size() != feature_dim) {
      throw Error(ErrorKind::kInvalidInput, "sample " + std::to_string(i) + " has dimension " +
                                                std::to_string(s.features.size()) + ", expected " +
                                                std::to_string(feature_dim));
    }
  }
}

std::string format_double(double value) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_dataset(const std::filesystem::path& path, std::span<const LabeledSample> samples,
                   std::size_t n_classes, std::size_t feature_dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfig, "cannot open " + path.string() + " for writing");
  out << "n_classes=" << n_classes << ",dim=" << feature_dim << '\n';
  for (const auto& s : samples) {
    out << s.label;
    for (double f : s.features) out << ',' << format_double(f);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kConfig, "write failed for " + path.string());
}

namespace {

std::size_t parse_size(std::string_view text, const std::string& where) {
  std::size_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::kInvalidInput, where + ": expected an integer, got \"" + std::string(text) + "\"");
  }
  return value;
}

double parse_double(const std::string& text, const std::string& where) {
  // strtod rather than from_chars: libstdc++ 11 lacks floating-point from_chars.
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::kInvalidInput, where + ": bad feature value \"" + text + "\"");
  }
  return value;
}

}  // namespace

DatasetFile read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open dataset " + path.string());

  DatasetFile file;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kInvalidInput, path.string() + ": missing header");
  const std::string n_key = "n_classes=";
  const std::string d_key = ",dim=";
  const auto d_pos = line.find(d_key);
  if (line.rfind(n_key, 0) != 0 || d_pos == std::string::npos) {
    throw Error(ErrorKind::kInvalidInput, path.string() + ": header must be n_classes=<n>,dim=<d>");
  }
  file.n_classes = parse_size(std::string_view(line).substr(n_key.size(), d_pos - n_key.size()),
                              path.string() + " header");
  file.feature_dim = parse_size(std::string_view(line).substr(d_pos + d_key.size()), path.string() + " header");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::stringstream ss(line);
    std::string field;
    LabeledSample sample;
    if (!std::getline(ss, field, ',')) throw Error(ErrorKind::kInvalidInput, where + ": empty record");
    sample.label = parse_size(field, where);
    while (std::getline(ss, field, ',')) sample.features.push_back(parse_double(field, where));
    file.samples.push_back(std::move(sample));
  }
  validate_samples(file.samples, file.n_classes, file.feature_dim);
  return file;
}

void write_splits(const std::filesystem::path& dir, const DatasetSplits& splits) {
  std::filesystem::create_directories(dir);
  write_dataset(dir / "train.csv", splits.train(), splits.n_classes(), splits.feature_dim());
  write_dataset(dir / "val.csv", splits.val(), splits.n_classes(), splits.feature_dim());
  write_dataset(dir / "test.csv", splits.test(), splits.n_classes(), splits.feature_dim());
}

DatasetSplits read_splits(const std::filesystem::path& dir) {
  auto train = read_dataset(dir / "train.csv");
  auto val = read_dataset(dir / "val.csv");
  auto test = read_dataset(dir / "test.csv");
  if (val.n_classes != train.n_classes || test.n_classes != train.n_classes ||
      val.feature_dim != train.feature_dim || test.feature_dim != train.feature_dim) {
    throw Error(ErrorKind::kInvalidInput, dir.string() + ": split headers disagree");
  }
  return DatasetSplits(train.n_classes, train.feature_dim, std::move(train.samples),
                       std::move(val.samples), std::move(test.samples));
}

}  // namespace synth
