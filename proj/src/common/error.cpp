#include "cargoscan/common/error.hpp"

namespace cargoscan {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kUnsupportedDepth: return "unsupported depth";
    case ErrorKind::kEmptyImage: return "empty image";
    case ErrorKind::kBounds: return "bounds error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kPlacement: return "placement error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kProtocol: return "protocol error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cargoscan
