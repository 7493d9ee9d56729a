#include "spsim/error.hpp"

namespace spsim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoStopband: return "NoStopband";
    case ErrorKind::NoDip: return "NoDip";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::NoDecayDetected: return "NoDecayDetected";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::InsufficientSpan: return "InsufficientSpan";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NoPeak: return "NoPeak";
    case ErrorKind::WindowExceedsPeriod: return "WindowExceedsPeriod";
    case ErrorKind::RangeExceeded: return "RangeExceeded";
    case ErrorKind::InsufficientPeaks: return "InsufficientPeaks";
    case ErrorKind::NonBracketing: return "NonBracketing";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool Error::is_validation() const noexcept {
  return kind_ == ErrorKind::InvalidArgument || kind_ == ErrorKind::Config ||
         kind_ == ErrorKind::OutOfRange || kind_ == ErrorKind::Io;
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace spsim
