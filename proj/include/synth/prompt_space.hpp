#pragma once

// Prompt dictionary, the fixed four-slot template, and the flat action index.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "synth/rng.hpp"

namespace synth {

inline constexpr std::size_t kClassSlots = 3;

// Immutable after construction.
class Dictionary {
 public:
  Dictionary(std::vector<std::string> domains, std::vector<std::string> classes);

  const std::vector<std::string>& domains() const noexcept { return domains_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t domain_count() const noexcept { return domains_.size(); }
  std::size_t class_count() const noexcept { return classes_.size(); }

 private:
  std::vector<std::string> domains_;
  std::vector<std::string> classes_;
};

struct PromptAction {
  std::size_t domain = 0;
  std::array<std::size_t, kClassSlots> classes{};

  bool operator==(const PromptAction&) const = default;
};

struct Prompt {
  std::string text;
  PromptAction action;
};

// Throws kInvalidAction naming the offending field.
void validate_action(const Dictionary& dict, const PromptAction& action);

// "A {domain} of a {c1}, {c2}, and {c3}"
Prompt format_prompt(const Dictionary& dict, const PromptAction& action);

// |domains| * n^3.
std::uint64_t action_space_size(const Dictionary& dict);

// Row-major (domain, c1, c2, c3); domain varies slowest.
std::uint64_t action_index(const Dictionary& dict, const PromptAction& action);
PromptAction action_of_index(const Dictionary& dict, std::uint64_t index);

// Uniform over the full flat-index space.
PromptAction random_action(const Dictionary& dict, Rng& rng);
PromptAction random_action(const Dictionary& dict, std::uint64_t seed);

// Uniform class slots with the domain held fixed.
PromptAction random_action_fixed_domain(const Dictionary& dict, std::size_t domain, Rng& rng);

}  // namespace synth
