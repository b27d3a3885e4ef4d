#include "synth/prompt_space.hpp"

#include <set>
#include <utility>

#include "synth/error.hpp"

namespace synth {

namespace {

void require_unique_nonempty(const std::vector<std::string>& tokens, const char* what) {
  if (tokens.empty()) {
    throw Error(ErrorKind::kConfig, std::string("dictionary ") + what + " list is empty");
  }
  std::set<std::string> seen;
  for (const auto& t : tokens) {
    if (t.empty()) {
      throw Error(ErrorKind::kConfig, std::string("dictionary ") + what + " contains an empty token");
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorKind::kConfig,
                  std::string("dictionary ") + what + " token \"" + t + "\" is duplicated");
    }
  }
}

}  // namespace

Dictionary::Dictionary(std::vector<std::string> domains, std::vector<std::string> classes)
    : domains_(std::move(domains)), classes_(std::move(classes)) {
  require_unique_nonempty(domains_, "domains");
  require_unique_nonempty(classes_, "classes");
}

void validate_action(const Dictionary& dict, const PromptAction& action) {
  if (action.domain >= dict.domain_count()) {
    throw Error(ErrorKind::kInvalidAction,
                "domain_idx " + std::to_string(action.domain) + " out of range [0, " +
                    std::to_string(dict.domain_count()) + ")");
  }
  for (std::size_t slot = 0; slot < kClassSlots; ++slot) {
    if (action.classes[slot] >= dict.class_count()) {
      throw Error(ErrorKind::kInvalidAction,
                  "class_idx[" + std::to_string(slot) + "] " + std::to_string(action.classes[slot]) +
                      " out of range [0, " + std::to_string(dict.class_count()) + ")");
    }
  }
}

Prompt format_prompt(const Dictionary& dict, const PromptAction& action) {
  validate_action(dict, action);
  const auto& c = dict.classes();
  std::string text = "A " + dict.domains()[action.domain] + " of a " + c[action.classes[0]] + ", " +
                     c[action.classes[1]] + ", and " + c[action.classes[2]];
  return Prompt{std::move(text), action};
}

std::uint64_t action_space_size(const Dictionary& dict) {
  const std::uint64_t n = dict.class_count();
  return dict.domain_count() * n * n * n;
}

std::uint64_t action_index(const Dictionary& dict, const PromptAction& action) {
  validate_action(dict, action);
  const std::uint64_t n = dict.class_count();
  std::uint64_t index = action.domain;
  for (std::size_t c : action.classes) index = index * n + c;
  return index;
}

PromptAction action_of_index(const Dictionary& dict, std::uint64_t index) {
  if (index >= action_space_size(dict)) {
    throw Error(ErrorKind::kInvalidAction, "flat index " + std::to_string(index) +
                                               " out of range [0, " +
                                               std::to_string(action_space_size(dict)) + ")");
  }
  const std::uint64_t n = dict.class_count();
  PromptAction action;
  for (std::size_t slot = kClassSlots; slot-- > 0;) {
    action.classes[slot] = static_cast<std::size_t>(index % n);
    index /= n;
  }
  action.domain = static_cast<std::size_t>(index);
  return action;
}

PromptAction random_action(const Dictionary& dict, Rng& rng) {
  std::uniform_int_distribution<std::uint64_t> pick(0, action_space_size(dict) - 1);
  return action_of_index(dict, pick(rng));
}

PromptAction random_action(const Dictionary& dict, std::uint64_t seed) {
  Rng rng(seed);
  return random_action(dict, rng);
}

PromptAction random_action_fixed_domain(const Dictionary& dict, std::size_t domain, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, dict.class_count() - 1);
  PromptAction action;
  action.domain = domain;
  for (auto& c : action.classes) c = pick(rng);
  validate_action(dict, action);
  return action;
}

}  // namespace synth
