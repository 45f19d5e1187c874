#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fsd {

enum class ErrorCode {
  kInvalidArgument,
  kZeroBaseline,
  kDegenerateLine,
  kInvalidRange,
  kChannelMismatch,
  kShapeMismatch,
  kNonPositiveDepth,
  kEmptyMask,
  kImageTooSmall,
  kNoVoPoints,
  kSingularSystem,
  kTooLarge,
  kNoValidPixels,
  kEmptyList,
  kInvalidSpec,
  kBadFormat,
  kIo,
  kParseError,
  kOutOfBounds,
  kNotARotation,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code logic) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fsd
