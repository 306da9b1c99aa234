#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eqshbc {

enum class ErrorCode {
  InvalidSpec,
  GridTooLarge,
  ElectrodeOutsideBody,
  ElectrodesOverlap,
  ParseError,
  NegativeConductivity,
  MissingTissue,
  NoGroundPlane,
  NoElectrodes,
  SingularSystem,
  SystemTooLarge,
  MismatchedInputs,
  ContactOffSurface,
  ContactSpacing,
  ZeroRadius,
  GridMismatch,
  OutOfBounds,
  TooFewPoints,
  DuplicateCoordinate,
  MissingTxPower,
  NoOverlap,
  ConfigError,
  MissingArtifact,
  IoError,
  NoConvergence,
  NonPassive,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string &detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

} // namespace eqshbc
