#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "synth/error.hpp"
#include "synth/prompt_space.hpp"

using namespace synth;

namespace {

Dictionary cifar() {
  return Dictionary({"photograph", "painting", "still-life", "image", "digital image"},
                    {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"});
}

std::vector<std::string> tokens(std::size_t n, const char* stem) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("prompt template") {
  Dictionary dict({"painting", "photograph"}, {"car", "bird", "dog"});
  CHECK(format_prompt(dict, {0, {0, 1, 2}}).text == "A painting of a car, bird, and dog");
  CHECK(format_prompt(dict, {1, {2, 2, 0}}).text == "A photograph of a dog, dog, and car");
  const auto p = format_prompt(dict, {1, {0, 0, 0}});
  CHECK(p.action == PromptAction{1, {0, 0, 0}});
}

TEST_CASE("invalid actions name the field") {
  Dictionary dict({"painting", "photograph"}, {"car", "bird", "dog"});
  try {
    format_prompt(dict, {2, {0, 0, 0}});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidAction);
    CHECK(std::string(e.what()).find("domain_idx") != std::string::npos);
  }
  try {
    format_prompt(dict, {0, {0, 3, 0}});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidAction);
    CHECK(std::string(e.what()).find("class_idx[1]") != std::string::npos);
  }
}

TEST_CASE("dictionary validation") {
  CHECK_THROWS_AS(Dictionary({}, {"a"}), Error);
  CHECK_THROWS_AS(Dictionary({"a"}, {}), Error);
  CHECK_THROWS_AS(Dictionary({"a", "a"}, {"b"}), Error);
  CHECK_THROWS_AS(Dictionary({"a"}, {"b", ""}), Error);
}

TEST_CASE("action space size") {
  CHECK(action_space_size(cifar()) == 5000);
  CHECK(action_space_size(Dictionary(tokens(5, "d"), tokens(200, "c"))) == 40'000'000);
}

TEST_CASE("flat index is a bijection") {
  const auto dict = cifar();
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < action_space_size(dict); ++i) {
    const auto a = action_of_index(dict, i);
    CHECK(action_index(dict, a) == i);
    seen.insert(action_index(dict, a));
  }
  CHECK(seen.size() == 5000);

  // row-major with the domain slowest
  CHECK(action_index(dict, {0, {0, 0, 1}}) == 1);
  CHECK(action_index(dict, {0, {0, 1, 0}}) == 10);
  CHECK(action_index(dict, {1, {0, 0, 0}}) == 1000);
  CHECK_THROWS_AS(action_of_index(dict, 5000), Error);

  const Dictionary big(tokens(5, "d"), tokens(200, "c"));
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_action(big, rng);
    CHECK(action_of_index(big, action_index(big, a)) == a);
  }
}

TEST_CASE("random actions are uniform over domains and slots") {
  const auto dict = cifar();
  Rng rng(11);
  const int draws = 100000;
  std::vector<std::vector<int>> counts(4);
  counts[0].assign(5, 0);
  for (int s = 1; s < 4; ++s) counts[s].assign(10, 0);
  for (int i = 0; i < draws; ++i) {
    const auto a = random_action(dict, rng);
    ++counts[0][a.domain];
    for (int s = 0; s < 3; ++s) ++counts[s + 1][a.classes[s]];
  }
  for (const auto& c : counts) {
    const double p = 1.0 / static_cast<double>(c.size());
    const double sd = std::sqrt(draws * p * (1 - p));
    for (int v : c) CHECK(std::abs(v - draws * p) < 5 * sd);
  }
  CHECK(random_action(dict, 42) == random_action(dict, 42));
}

TEST_CASE("fixed-domain random action") {
  const auto dict = cifar();
  Rng rng(3);
  for (int i = 0; i < 100; ++i) CHECK(random_action_fixed_domain(dict, 2, rng).domain == 2);
  CHECK_THROWS_AS(random_action_fixed_domain(dict, 5, rng), Error);
}
