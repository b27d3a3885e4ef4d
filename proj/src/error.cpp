#include "synth/error.hpp"

namespace synth {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidAction: return "invalid-action";
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kInvalidRequest: return "invalid-request";
    case ErrorKind::kConfig: return "configuration";
    case ErrorKind::kNumerical: return "numerical-failure";
    case ErrorKind::kBackendUnavailable: return "backend-unavailable";
    case ErrorKind::kProtocol: return "protocol";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kBackendUnavailable:
    case ErrorKind::kProtocol:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
    default:
      return 2;
  }
}

}  // namespace synth
