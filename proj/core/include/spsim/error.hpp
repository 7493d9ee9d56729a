#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spsim {

/// Failure categories raised by the simulation and analysis routines.
enum class ErrorKind {
  InvalidArgument,
  NoStopband,
  NoDip,
  ResolutionTooCoarse,
  NoDecayDetected,
  FitDiverged,
  InsufficientSpan,
  OutOfRange,
  NoPeak,
  WindowExceedsPeriod,
  RangeExceeded,
  InsufficientPeaks,
  NonBracketing,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// True for errors caused by bad user input rather than a failed computation.
  bool is_validation() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace spsim
