#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cargoscan {

// Failure categories. The CLI maps kIo to exit code 2 and every other kind
// to exit code 3 (data or contract violation).
enum class ErrorKind {
  kFormat,
  kUnsupportedDepth,
  kEmptyImage,
  kBounds,
  kSize,
  kValidation,
  kTraining,
  kDegenerateInput,
  kPlacement,
  kDomain,
  kInput,
  kProtocol,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace cargoscan
