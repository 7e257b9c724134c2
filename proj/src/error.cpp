#include "protogram/error.hpp"

namespace protogram {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kLoad: return "load";
    case ErrorKind::kEmptyDocument: return "empty-document";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kDegenerateTraining: return "degenerate-training";
    case ErrorKind::kCatalogMismatch: return "catalog-mismatch";
    case ErrorKind::kEmptyTypes: return "empty-types";
    case ErrorKind::kUnassignableKind: return "unassignable-kind";
    case ErrorKind::kUnresolvedArgument: return "unresolved-argument";
    case ErrorKind::kLayout: return "layout";
    case ErrorKind::kSyntax: return "syntax";
    case ErrorKind::kSingletonViolation: return "singleton-violation";
    case ErrorKind::kExclusionViolation: return "exclusion-violation";
    case ErrorKind::kUngeneratable: return "ungeneratable";
    case ErrorKind::kConfiguration: return "configuration";
  }
  return "unknown";
}

}  // namespace protogram
