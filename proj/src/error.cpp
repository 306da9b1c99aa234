#include "eqshbc/error.hpp"

namespace eqshbc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidSpec: return "InvalidSpec";
  case ErrorCode::GridTooLarge: return "GridTooLarge";
  case ErrorCode::ElectrodeOutsideBody: return "ElectrodeOutsideBody";
  case ErrorCode::ElectrodesOverlap: return "ElectrodesOverlap";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::NegativeConductivity: return "NegativeConductivity";
  case ErrorCode::MissingTissue: return "MissingTissue";
  case ErrorCode::NoGroundPlane: return "NoGroundPlane";
  case ErrorCode::NoElectrodes: return "NoElectrodes";
  case ErrorCode::SingularSystem: return "SingularSystem";
  case ErrorCode::SystemTooLarge: return "SystemTooLarge";
  case ErrorCode::MismatchedInputs: return "MismatchedInputs";
  case ErrorCode::ContactOffSurface: return "ContactOffSurface";
  case ErrorCode::ContactSpacing: return "ContactSpacing";
  case ErrorCode::ZeroRadius: return "ZeroRadius";
  case ErrorCode::GridMismatch: return "GridMismatch";
  case ErrorCode::OutOfBounds: return "OutOfBounds";
  case ErrorCode::TooFewPoints: return "TooFewPoints";
  case ErrorCode::DuplicateCoordinate: return "DuplicateCoordinate";
  case ErrorCode::MissingTxPower: return "MissingTxPower";
  case ErrorCode::NoOverlap: return "NoOverlap";
  case ErrorCode::ConfigError: return "ConfigError";
  case ErrorCode::MissingArtifact: return "MissingArtifact";
  case ErrorCode::IoError: return "IoError";
  case ErrorCode::NoConvergence: return "NoConvergence";
  case ErrorCode::NonPassive: return "NonPassive";
  }
  return "Unknown";
}

} // namespace eqshbc
