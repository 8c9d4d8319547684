#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pap {

enum class ErrorCode {
  kDegenerateRay,
  kInvalidSpec,
  kDimensionMismatch,
  kGridTooDense,
  kBadIndex,
  kUnparseableResponse,
  kEmptyGridBoxes,
  kBackendError,
  kTimeout,
  kNoDetection,
  kMaskDimMismatch,
  kGroundingFailed,
  kUnknownImage,
  kEmptyEvaluation,
  kDatasetFormatError,
  kDegenerateRegion,
  kIoError,
  kConfigError,
  kSchemaViolation,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure path raises this with a code so
/// callers (CLI exit codes, HTTP status mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Transport or server-side failure. `status` is the HTTP status, or 0 when
/// no response was received.
class BackendError : public Error {
 public:
  BackendError(int status, std::string body, const std::string& what)
      : Error(ErrorCode::kBackendError, what), status_(status), body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace pap
