#include "ragsr/error.hpp"

#include <utility>

namespace ragsr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Invariant: return "invariant";
    case ErrorKind::MissingField: return "missing-field";
    case ErrorKind::Io: return "io";
    case ErrorKind::NoRecording: return "no-recording";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::EmptyMaskRow: return "empty-mask-row";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

}  // namespace ragsr
