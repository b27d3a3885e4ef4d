#include "synth/generator.hpp"

#include <cmath>
#include <iostream>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "synth/error.hpp"
#include "synth/rng.hpp"

namespace synth {

std::uint64_t request_seed(std::uint64_t run_seed, std::size_t step, std::uint64_t flat_index) {
  return derive_seed({run_seed, step, flat_index}) >> 1;
}

void SimulatorSpec::validate() const {
  if (centroids.empty()) throw Error(ErrorKind::kConfig, "simulator: no class centroids");
  const std::size_t d = centroids.front().size();
  if (d == 0) throw Error(ErrorKind::kConfig, "simulator: zero feature dimension");
  for (const auto& mu : centroids) {
    if (mu.size() != d) throw Error(ErrorKind::kConfig, "simulator: centroid dimensions differ");
  }
  if (class_sigma.size() != centroids.size()) {
    throw Error(ErrorKind::kConfig, "simulator: need one sigma per class");
  }
  for (double s : class_sigma) {
    if (!(s > 0.0)) throw Error(ErrorKind::kConfig, "simulator: class sigma must be > 0");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < kClassSlots; ++i) {
    if (!(slot_weights[i] > 0.0)) throw Error(ErrorKind::kConfig, "simulator: slot weights must be positive");
    if (i > 0 && !(slot_weights[i] < slot_weights[i - 1])) {
      throw Error(ErrorKind::kConfig, "simulator: slot weights must be strictly decreasing");
    }
    sum += slot_weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::kConfig, "simulator: slot weights must sum to 1");
  if (domain_noise.empty()) throw Error(ErrorKind::kConfig, "simulator: no domain noise multipliers");
  for (double m : domain_noise) {
    if (!(m > 0.0)) throw Error(ErrorKind::kConfig, "simulator: domain noise must be > 0");
  }
}

namespace {

void check_action(const SimulatorSpec& spec, const PromptAction& action) {
  if (action.domain >= spec.domain_noise.size()) {
    throw Error(ErrorKind::kInvalidAction, "simulator: unknown domain " + std::to_string(action.domain));
  }
  for (std::size_t c : action.classes) {
    if (c >= spec.centroids.size()) {
      throw Error(ErrorKind::kInvalidAction, "simulator: unknown class " + std::to_string(c));
    }
  }
}

}  // namespace

std::vector<double> simulator_mean(const SimulatorSpec& spec, const PromptAction& action) {
  check_action(spec, action);
  std::vector<double> mean(spec.feature_dim(), 0.0);
  for (std::size_t s = 0; s < kClassSlots; ++s) {
    const auto& mu = spec.centroids[action.classes[s]];
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += spec.slot_weights[s] * mu[j];
  }
  return mean;
}

double simulator_scale(const SimulatorSpec& spec, const PromptAction& action) {
  check_action(spec, action);
  double sigma = 0.0;
  for (std::size_t c : action.classes) sigma += spec.class_sigma[c];
  return spec.domain_noise[action.domain] * sigma / static_cast<double>(kClassSlots);
}

GeneratorBatch simulate_generate(const SimulatorSpec& spec, const GeneratorRequest& request) {
  if (request.count == 0) throw Error(ErrorKind::kInvalidRequest, "generator: count must be >= 1");
  if (request.feature_dim != spec.feature_dim()) {
    throw Error(ErrorKind::kConfig, "generator: request feature_dim " + std::to_string(request.feature_dim) +
                                        " != simulator dimension " + std::to_string(spec.feature_dim()));
  }
  const auto mean = simulator_mean(spec, request.prompt.action);
  const double scale = simulator_scale(spec, request.prompt.action);

  Rng rng(request.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneratorBatch batch;
  batch.backend_info = "simulator";
  batch.samples.reserve(request.count);
  for (std::size_t i = 0; i < request.count; ++i) {
    std::vector<double> x(mean.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = mean[j] + scale * normal(rng);
    batch.samples.push_back(std::move(x));
  }
  return batch;
}

SimulatedGenerator::SimulatedGenerator(SimulatorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

GeneratorBatch SimulatedGenerator::generate(const GeneratorRequest& request) {
  return simulate_generate(spec_, request);
}

std::string encode_generate_request(const GeneratorRequest& request) {
  nlohmann::json body = {
      {"prompt", request.prompt.text},
      {"count", request.count},
      {"seed", request.seed},
      {"feature_dim", request.feature_dim},
  };
  return body.dump();
}

GeneratorBatch decode_generate_response(const std::string& body, const GeneratorRequest& request) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("response is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kProtocol, "response is not a JSON object");
  if (!doc.contains("samples") || !doc["samples"].is_array()) {
    throw Error(ErrorKind::kProtocol, "response field \"samples\" missing or not an array");
  }
  const auto& samples = doc["samples"];
  if (samples.size() != request.count) {
    throw Error(ErrorKind::kProtocol, "samples length " + std::to_string(samples.size()) +
                                          " != requested count " + std::to_string(request.count));
  }

  GeneratorBatch batch;
  batch.samples.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& row = samples[i];
    if (!row.is_array() || row.size() != request.feature_dim) {
      throw Error(ErrorKind::kProtocol, "samples[" + std::to_string(i) + "] dimension mismatch: expected " +
                                            std::to_string(request.feature_dim));
    }
    std::vector<double> x;
    x.reserve(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j].is_number()) {
        throw Error(ErrorKind::kProtocol,
                    "samples[" + std::to_string(i) + "][" + std::to_string(j) + "] is not a number");
      }
      const double v = row[j].get<double>();
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kProtocol,
                    "samples[" + std::to_string(i) + "][" + std::to_string(j) + "] is not finite");
      }
      x.push_back(v);
    }
    batch.samples.push_back(std::move(x));
  }
  if (doc.contains("backend_info")) {
    if (!doc["backend_info"].is_string()) {
      throw Error(ErrorKind::kProtocol, "response field \"backend_info\" is not a string");
    }
    batch.backend_info = doc["backend_info"].get<std::string>();
  } else {
    throw Error(ErrorKind::kProtocol, "response field \"backend_info\" missing");
  }
  return batch;
}

namespace {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = endpoint.find('/', host_start);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string path = endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {endpoint.substr(0, path_start), path};
}

}  // namespace

RemoteGenerator::RemoteGenerator(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorKind::kConfig, "remote generator: endpoint not configured");
  if (!(config_.timeout_seconds > 0.0)) throw Error(ErrorKind::kConfig, "remote generator: timeout must be > 0");
  std::tie(scheme_host_port_, base_path_) = split_endpoint(config_.endpoint);
}

GeneratorBatch RemoteGenerator::generate(const GeneratorRequest& request) {
  if (request.count == 0) throw Error(ErrorKind::kInvalidRequest, "generator: count must be >= 1");

  httplib::Client client(scheme_host_port_);
  const auto whole = static_cast<time_t>(config_.timeout_seconds);
  const auto micros = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(whole)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);

  const std::string body = encode_generate_request(request);
  const std::string path = base_path_ + "/v1/generate";
  std::string last_failure;
  for (std::size_t attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      retries_.fetch_add(1);
      std::clog << "remote generator: retry " << attempt << "/" << config_.retries << " after "
                << last_failure << '\n';
    }
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return decode_generate_response(res->body, request);
    if (res->status == 503 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    std::string detail = res->body;
    try {
      const auto doc = nlohmann::json::parse(res->body);
      if (doc.is_object() && doc.contains("error") && doc["error"].is_string()) {
        detail = doc["error"].get<std::string>();
      }
    } catch (const nlohmann::json::exception&) {
    }
    throw Error(ErrorKind::kProtocol,
                "service rejected request with HTTP " + std::to_string(res->status) + ": " + detail);
  }
  throw Error(ErrorKind::kBackendUnavailable, "remote generator at " + config_.endpoint + " unavailable after " +
                                                  std::to_string(config_.retries) + " retries (" +
                                                  last_failure + ")");
}

GeneratorBatch remote_generate(const RemoteConfig& config, const GeneratorRequest& request) {
  RemoteGenerator client(config);
  return client.generate(request);
}

}  // namespace synth
