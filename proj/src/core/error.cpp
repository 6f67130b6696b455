#include "dcl/error.hpp"

#include <atomic>
#include <iostream>

namespace dcl {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConnectivityFailure: return "ConnectivityFailure";
    case ErrorCode::FactorizationMismatch: return "FactorizationMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::ZeroLipschitz: return "ZeroLipschitz";
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonPositiveMean: return "NonPositiveMean";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::HorizonZero: return "HorizonZero";
    case ErrorCode::DegenerateStart: return "DegenerateStart";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

void warn(const std::string& message) {
  if (g_warnings_enabled.load(std::memory_order_relaxed)) {
    std::cerr << "dcl warning: " << message << '\n';
  }
}

void set_warnings_enabled(bool enabled) {
  g_warnings_enabled.store(enabled, std::memory_order_relaxed);
}

}  // namespace dcl
