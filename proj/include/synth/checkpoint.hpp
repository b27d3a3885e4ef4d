#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "synth/policy.hpp"

namespace synth {

// Text format: magic line, config hash, shape header, parameter count, then one
// value per line at 17 significant digits.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, std::uint64_t config_hash);

struct Checkpoint {
  PolicyParams params;
  std::uint64_t config_hash = 0;
};

// Throws kConfig when the file is malformed or its hash differs from `expected_hash`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_hash = std::nullopt);

}  // namespace synth
