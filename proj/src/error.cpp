#include "moreau/error.hpp"

#include <atomic>
#include <iostream>

namespace moreau {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConstants: return "invalid-constants";
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidCount: return "invalid-count";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNotClosedForm: return "not-closed-form";
    case ErrorCode::kCertificationFailed: return "certification-failed";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kRegimeViolation: return "regime-violation";
    case ErrorCode::kBracketFailure: return "bracket-failure";
    case ErrorCode::kSingularSystem: return "singular-system";
    case ErrorCode::kNonContraction: return "non-contraction";
    case ErrorCode::kInsufficientDecay: return "insufficient-decay";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {
std::atomic<WarningSink> g_sink{nullptr};
}

void set_warning_sink(WarningSink sink) { g_sink.store(sink); }

void warn(std::string_view message) {
  if (auto sink = g_sink.load()) {
    sink(message);
    return;
  }
  std::cerr << "warning: " << message << '\n';
}

}  // namespace moreau
