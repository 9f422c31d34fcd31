#pragma once

#include <stdexcept>
#include <string>

namespace flare {

// Error taxonomy used across the library. CLI maps these to exit code 1.
enum class ErrorKind {
  Io,         // unreadable/unwritable file
  Format,     // unsupported or corrupt file content
  Dimension,  // incompatible image/kernel/mask extents
  Parameter,  // out-of-range configuration value
  Contract,   // caller violated an operation precondition
  Search,     // patch search exhausted its window
  Stall,      // inpainting made no progress
  NonFinite,  // NaN/Inf detected in an optimization stage
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Search: return "search";
    case ErrorKind::Stall: return "stall";
    case ErrorKind::NonFinite: return "non-finite";
  }
  return "unknown";
}

}  // namespace flare
