#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moreau {

enum class ErrorCode {
  kInvalidConstants,
  kInvalidDimension,
  kInvalidCount,
  kDimensionMismatch,
  kNotClosedForm,
  kCertificationFailed,
  kDivergence,
  kRegimeViolation,
  kBracketFailure,
  kSingularSystem,
  kNonContraction,
  kInsufficientDecay,
  kInvalidConfig,
  kIo,
};

/// Stable kebab-case name, e.g. "certification-failed".
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Non-fatal diagnostics (e.g. a fixed-point step with gamma*L >= 1).
/// Written to stderr unless a sink is installed; the sink is process-global.
using WarningSink = void (*)(std::string_view message);
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace moreau
