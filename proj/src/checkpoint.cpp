#include "synth/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "synth/dataset.hpp"
#include "synth/error.hpp"

namespace synth {

namespace {
constexpr const char* kMagic = "synth-policy 1";
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, std::uint64_t config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write checkpoint " + path.string());
  const auto& s = params.shape();
  out << kMagic << '\n';
  out << "config_hash " << std::hex << std::setw(16) << std::setfill('0') << config_hash << std::dec << '\n';
  out << "shape " << s.input_dim << ' ' << s.hidden << ' ' << s.domain_count << ' ' << s.class_count << '\n';
  out << "count " << params.values().size() << '\n';
  for (double v : params.values()) out << format_double(v) << '\n';
  if (!out) throw Error(ErrorKind::kConfig, "write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open checkpoint " + path.string());
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorKind::kConfig, "checkpoint " + path.string() + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("bad magic line");

  std::string key;
  std::string hash_text;
  if (!(in >> key >> hash_text) || key != "config_hash") throw fail("missing config_hash");
  Checkpoint ck;
  ck.config_hash = std::strtoull(hash_text.c_str(), nullptr, 16);
  if (expected_hash && *expected_hash != ck.config_hash) throw fail("config hash mismatch");

  PolicyShape shape;
  if (!(in >> key >> shape.input_dim >> shape.hidden >> shape.domain_count >> shape.class_count) ||
      key != "shape") {
    throw fail("missing shape header");
  }
  std::size_t count = 0;
  if (!(in >> key >> count) || key != "count") throw fail("missing parameter count");
  PolicyParams params(shape);
  if (count != params.values().size()) throw fail("parameter count does not match shape");
  for (double& v : params.values()) {
    std::string token;
    if (!(in >> token)) throw fail("truncated parameter list");
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) throw fail("bad parameter value \"" + token + "\"");
  }
  ck.params = std::move(params);
  return ck;
}

}  // namespace synth
