#include "larm/core.hpp"

namespace larm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::StateCountMismatch: return "StateCountMismatch";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DiskWrite: return "DiskWrite";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::EmptyForeground: return "EmptyForeground";
    case ErrorCode::MissingAuxiliaryGT: return "MissingAuxiliaryGT";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::TooFewMatches: return "TooFewMatches";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NoSurface: return "NoSurface";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace larm
