#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gsal {

enum class ErrorCode {
  IoError,
  BadMagic,
  BadHeader,
  ShapeMismatch,
  NonFiniteValue,
  BadJson,
  MissingField,
  DuplicateImageId,
  UnknownClassLabel,
  ClassOutOfRange,
  EmptyActivation,
  IdMismatch,
  EmptyMask,
  BadPercentile,
  DegenerateDistribution,
  EmptyInput,
  LengthMismatch,
  TooFewPoints,
  TooFewGroups,
  TooFewNonzeroDiffs,
  MissingMask,
  MissingSaliency,
  MissingPrediction,
  InsufficientUninked,
  BadRatio,
  BadArgument,
  IncompatibleReports,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library. Carries a machine-readable code plus
// optional image/file context that the CLI forwards to stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& image_id() const noexcept { return image_id_; }
  const std::string& path() const noexcept { return path_; }

  Error& with_image(std::string image_id) {
    image_id_ = std::move(image_id);
    return *this;
  }
  Error& with_path(std::string path) {
    path_ = std::move(path);
    return *this;
  }

 private:
  ErrorCode code_;
  std::string image_id_;
  std::string path_;
};

}  // namespace gsal
