#pragma once

#include <stdexcept>
#include <string>

namespace dfcr {

enum class ErrorCode {
  InvalidArgument,
  PointAtInfinity,
  DegenerateConfiguration,
  OutOfFrame,
  NonAsciiInput,
  InvalidArmorChar,
  MalformedSentence,
  ChecksumMismatch,
  IncompleteFragmentGroup,
  UnsupportedType,
  FieldOverflow,
  ImageSmallerThanWindow,
  EmptyDataset,
  SingleClassTraining,
  DimensionMismatch,
  EmptyInput,
  AllZeroDifferences,
  ConfigInvalid,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dfcr
