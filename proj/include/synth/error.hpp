#pragma once

#include <stdexcept>
#include <string>

namespace synth {

enum class ErrorKind {
  kInvalidAction,
  kInvalidInput,
  kInvalidRequest,
  kConfig,
  kNumerical,
  kBackendUnavailable,
  kProtocol,
};

// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

// 0 success, 2 configuration error, 3 backend failure, 4 numerical failure.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace synth
