#include "fsd/error.hpp"

namespace fsd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kDegenerateLine: return "DegenerateLine";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kChannelMismatch: return "ChannelMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kNoVoPoints: return "NoVoPoints";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kNoValidPixels: return "NoValidPixels";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kBadFormat: return "BadFormat";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kNotARotation: return "NotARotation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace fsd
