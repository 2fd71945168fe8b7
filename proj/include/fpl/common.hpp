#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fpl {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Failure categories shared by all modules.
enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  NotNegativeDefinite,
  RankDeficient,
  IndexOutOfRange,
  InfeasibleRank,
  SectorMismatch,
  EmptySector,
  NotAProjector,
  NotHartreeFock,
  KernelNotAntisymmetric,
  WrongSector,
  NotOrthonormal,
  LimitUnstable,
  Singular,
  InsufficientOuterDim,
  CapExceeded,
  ChainNotConverged,
  AllNull,
  NullDenominator,
  ZeroProjection,
  OverlappingSupports,
  NotSpecialUnitary,
  TruncationOverflow,
  DegenerateGrid,
  BudgetExceeded,
  NotCollinear,
  UnknownExperiment,
  MissingParameter,
  WriteFailure,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace fpl
