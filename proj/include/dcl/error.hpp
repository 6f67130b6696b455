#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcl {

// Failure categories surfaced by the library. The C API maps each one onto a
// dcl_status value.
enum class ErrorCode {
  InvalidArgument,
  ConnectivityFailure,
  FactorizationMismatch,
  NotPositiveDefinite,
  DimensionMismatch,
  NonPositiveScale,
  ZeroLipschitz,
  GammaOutOfRange,
  NoConvergence,
  NonPositiveMean,
  DegenerateProbability,
  HorizonZero,
  DegenerateStart,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

// Non-fatal diagnostics (step sizes beyond the proven bound, ridge fallback in
// least squares). Written to stderr unless silenced.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace dcl
