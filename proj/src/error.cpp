#include "dfcr/error.hpp"

namespace dfcr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::OutOfFrame: return "OutOfFrame";
    case ErrorCode::NonAsciiInput: return "NonAsciiInput";
    case ErrorCode::InvalidArmorChar: return "InvalidArmorChar";
    case ErrorCode::MalformedSentence: return "MalformedSentence";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::IncompleteFragmentGroup: return "IncompleteFragmentGroup";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::FieldOverflow: return "FieldOverflow";
    case ErrorCode::ImageSmallerThanWindow: return "ImageSmallerThanWindow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dfcr
