#pragma once

// Generative backends: a seeded Gaussian simulator and an HTTP client for the
// remote text-to-image feature service.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "synth/prompt_space.hpp"

namespace synth {

struct GeneratorRequest {
  Prompt prompt;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t feature_dim = 0;
};

struct GeneratorBatch {
  std::vector<std::vector<double>> samples;
  std::string backend_info;
};

class Generator {
 public:
  virtual ~Generator() = default;
  // Must be safe to call concurrently.
  virtual GeneratorBatch generate(const GeneratorRequest& request) = 0;
};

// Seed of the m-sample request issued at `step` for the action with `flat_index`.
// Kept within the non-negative int64 range so it survives JSON round trips.
std::uint64_t request_seed(std::uint64_t run_seed, std::size_t step, std::uint64_t flat_index);

struct SimulatorSpec {
  std::vector<std::vector<double>> centroids;  // one per class
  std::vector<double> class_sigma;
  std::array<double, kClassSlots> slot_weights{0.6, 0.25, 0.15};
  std::vector<double> domain_noise;  // one multiplier per domain

  std::size_t feature_dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
  // Throws kConfig when weights are not positive, strictly decreasing and normalized.
  void validate() const;
};

// Mean w1*mu_c1 + w2*mu_c2 + w3*mu_c3, scale = domain noise * mean of the three sigmas.
std::vector<double> simulator_mean(const SimulatorSpec& spec, const PromptAction& action);
double simulator_scale(const SimulatorSpec& spec, const PromptAction& action);

GeneratorBatch simulate_generate(const SimulatorSpec& spec, const GeneratorRequest& request);

class SimulatedGenerator final : public Generator {
 public:
  explicit SimulatedGenerator(SimulatorSpec spec);
  GeneratorBatch generate(const GeneratorRequest& request) override;
  const SimulatorSpec& spec() const noexcept { return spec_; }

 private:
  SimulatorSpec spec_;
};

struct RemoteConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8000"
  double timeout_seconds = 120.0;
  std::size_t retries = 3;
};

// Wire helpers, exposed for tests.
std::string encode_generate_request(const GeneratorRequest& request);
GeneratorBatch decode_generate_response(const std::string& body, const GeneratorRequest& request);

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteConfig config);
  GeneratorBatch generate(const GeneratorRequest& request) override;

  std::uint64_t retries_performed() const noexcept { return retries_.load(); }

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::atomic<std::uint64_t> retries_{0};
};

GeneratorBatch remote_generate(const RemoteConfig& config, const GeneratorRequest& request);

}  // namespace synth
