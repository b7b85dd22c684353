#pragma once

#include <stdexcept>
#include <string>

namespace srvc {

// Bad caller input (dimensions, ranges, flags).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The content codec could not run (missing binary, non-zero exit, ...).
// `diagnostics` carries captured stderr of the external process, if any.
class CodecUnavailable : public std::runtime_error {
 public:
  CodecUnavailable(const std::string& what, std::string diagnostics = {})
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// Base for all failures reading a serialized stream.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrong magic / unsupported version.
class FormatError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

// Structurally readable but semantically invalid data (index >= M, ...).
class CorruptionError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

// Non-finite gradients or other optimizer failures.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace srvc
