#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazetrack {

enum class ErrorCode {
  InvalidArgument,
  NonDivisibleDimensions,
  ImageTooSmall,
  InsufficientRegions,
  EyeRegionTooSmall,
  NoSamples,
  DegenerateSamples,
  TooFewInliers,
  EmptyRange,
  AreaOutsideImage,
  NoCornerFound,
  NotCalibrated,
  DegenerateCalibration,
  InvalidSpec,
  TargetUnreachable,
  SourceUnavailable,
  CalibrationFailed,
  Io,
  Parse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonDivisibleDimensions: return "NonDivisibleDimensions";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InsufficientRegions: return "InsufficientRegions";
    case ErrorCode::EyeRegionTooSmall: return "EyeRegionTooSmall";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::TooFewInliers: return "TooFewInliers";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::AreaOutsideImage: return "AreaOutsideImage";
    case ErrorCode::NoCornerFound: return "NoCornerFound";
    case ErrorCode::NotCalibrated: return "NotCalibrated";
    case ErrorCode::DegenerateCalibration: return "DegenerateCalibration";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. Every recoverable failure in
/// the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gazetrack
