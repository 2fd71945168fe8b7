#include "fpl/common.hpp"

namespace fpl {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotNegativeDefinite: return "NotNegativeDefinite";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InfeasibleRank: return "InfeasibleRank";
    case Errc::SectorMismatch: return "SectorMismatch";
    case Errc::EmptySector: return "EmptySector";
    case Errc::NotAProjector: return "NotAProjector";
    case Errc::NotHartreeFock: return "NotHartreeFock";
    case Errc::KernelNotAntisymmetric: return "KernelNotAntisymmetric";
    case Errc::WrongSector: return "WrongSector";
    case Errc::NotOrthonormal: return "NotOrthonormal";
    case Errc::LimitUnstable: return "LimitUnstable";
    case Errc::Singular: return "Singular";
    case Errc::InsufficientOuterDim: return "InsufficientOuterDim";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::ChainNotConverged: return "ChainNotConverged";
    case Errc::AllNull: return "AllNull";
    case Errc::NullDenominator: return "NullDenominator";
    case Errc::ZeroProjection: return "ZeroProjection";
    case Errc::OverlappingSupports: return "OverlappingSupports";
    case Errc::NotSpecialUnitary: return "NotSpecialUnitary";
    case Errc::TruncationOverflow: return "TruncationOverflow";
    case Errc::DegenerateGrid: return "DegenerateGrid";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::NotCollinear: return "NotCollinear";
    case Errc::UnknownExperiment: return "UnknownExperiment";
    case Errc::MissingParameter: return "MissingParameter";
    case Errc::WriteFailure: return "WriteFailure";
  }
  return "Unknown";
}

}  // namespace fpl
