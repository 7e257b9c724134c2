#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protogram {

enum class ErrorKind {
  kLoad,
  kEmptyDocument,
  kUndefinedMetric,
  kDegenerateTraining,
  kCatalogMismatch,
  kEmptyTypes,
  kUnassignableKind,
  kUnresolvedArgument,
  kLayout,
  kSyntax,
  kSingletonViolation,
  kExclusionViolation,
  kUngeneratable,
  kConfiguration,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the whole pipeline; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace protogram
