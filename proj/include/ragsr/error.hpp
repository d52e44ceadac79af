#pragma once

#include <stdexcept>
#include <string>

namespace ragsr {

enum class ErrorKind {
  Parse,
  Invariant,
  MissingField,
  Io,
  NoRecording,
  Transport,
  Shape,
  NonFinite,
  EmptyMaskRow,
  Config,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this type. `module` names the
// component that raised it so pipeline-level callers can attribute errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace ragsr
