#pragma once

// Indefinite inner product spaces, discrete spacetimes, fermionic projectors and
// the closed-chain / causal-action machinery built on top of them.

#include <array>
#include <cstdint>
#include <vector>

#include "fpl/common.hpp"
#include "fpl/random.hpp"

namespace fpl::core {

/// Finite-dimensional space with Hermitian, non-degenerate Gram matrix S.
/// <u|v> = u^* S v.
class IndefiniteSpace {
 public:
  IndefiniteSpace() = default;
  explicit IndefiniteSpace(CMatrix gram);

  int dim() const { return static_cast<int>(gram_.rows()); }
  const CMatrix& gram() const { return gram_; }
  int positive() const { return p_; }
  int negative() const { return q_; }

  Complex inner(const CVector& u, const CVector& v) const { return u.dot(gram_ * v); }
  /// Matrix of <v_i|v_j> for the columns of `frame`.
  CMatrix gram_of(const CMatrix& frame) const { return frame.adjoint() * gram_ * frame; }
  /// Operator adjoint with respect to <.|.>: S^{-1} A^* S.
  CMatrix adjoint(const CMatrix& a) const;

 private:
  CMatrix gram_;
  int p_ = 0;
  int q_ = 0;
};

/// Spacetime of `points` points, each carrying a 4-dimensional spin space of
/// signature (2,2). `projectors[x]` is E_x and `bases[x]` an n x 4 matrix whose
/// orthonormal (Euclidean) columns span the image of E_x.
struct DiscreteSpacetime {
  IndefiniteSpace space;
  std::vector<CMatrix> projectors;
  std::vector<CMatrix> bases;

  int points() const { return static_cast<int>(projectors.size()); }
  int dim() const { return space.dim(); }

  /// Standard example: m points, S = diag(1,1,-1,-1) per point, E_x the
  /// coordinate projector onto the x-th block.
  static DiscreteSpacetime standard(int m);
  /// Validates and assembles a spacetime from arbitrary projectors.
  static DiscreteSpacetime from_projectors(IndefiniteSpace space, std::vector<CMatrix> projectors);
};

/// P = -sum_j |psi_j><psi_j| for a frame with <psi_i|psi_j> = -delta_ij.
struct FermionicProjector {
  CMatrix matrix;
  CMatrix frame;
  int rank() const { return static_cast<int>(frame.cols()); }
};

/// Orthonormalizes the columns of `vectors` against -<.|.> and builds P.
/// Throws RankDeficient for dependent columns and NotNegativeDefinite when the
/// span is not negative definite.
FermionicProjector frame_to_projector(const IndefiniteSpace& space, const CMatrix& vectors);

/// P(x,y) = E_x P E_y expressed in the spin bases of x and y (4 x 4).
CMatrix discrete_kernel(const FermionicProjector& p, const DiscreteSpacetime& st, int x, int y);
CMatrix discrete_kernel(const CMatrix& p, const DiscreteSpacetime& st, int x, int y);

struct ClosedChain {
  CMatrix matrix;
  std::array<Complex, 4> eigenvalues;
};

/// A_xy = P(x,y) P(y,x) and its spectrum.
ClosedChain closed_chain(const CMatrix& p, const DiscreteSpacetime& st, int x, int y);
ClosedChain closed_chain(const FermionicProjector& p, const DiscreteSpacetime& st, int x, int y);

std::array<Complex, 4> chain_spectrum(const CMatrix& a);

/// |A| = sum |lambda_i|.
double spectral_weight(const std::array<Complex, 4>& lambda);
/// |A^2| = sum |lambda_i|^2.
double spectral_weight_of_square(const std::array<Complex, 4>& lambda);

struct ActionValues {
  double action = 0.0;      // S = sum_{x,y} |A_xy^2|
  double constraint = 0.0;  // T = sum_{x,y} |A_xy|^2
};

ActionValues action_and_constraint(const CMatrix& p, const DiscreteSpacetime& st);

enum class Causal { Timelike, Spacelike, Lightlike };
const char* causal_name(Causal c);

/// Timelike: real spectrum. Spacelike: two complex conjugate pairs of equal
/// modulus. Lightlike: anything else.
Causal classify_causal(const std::array<Complex, 4>& lambda, double tol = 1e-8);
Causal classify_causal(const ClosedChain& chain, double tol = 1e-8);

struct MinimizeOptions {
  std::uint64_t seed = 1;
  int restarts = 8;
  int max_iterations = 300;
  double penalty = 100.0;         // mu in the merit S + mu (T - T0)^2
  double gradient_tolerance = 1e-8;
  double constraint_tolerance = 1e-9;  // relative, on |T - T0| / T0
};

struct MinimizeResult {
  FermionicProjector projector;
  double action = 0.0;
  double constraint = 0.0;
  double initial_action = 0.0;  // action of the best restart's starting point
  int iterations = 0;
  int best_restart = -1;
  bool constraint_met = false;
  bool no_progress = false;     // no restart improved on its starting point
  std::vector<double> trace;    // accepted action values of the best restart
};

/// Minimizes S over rank-f fermionic projectors with T = T0.
MinimizeResult minimize_action(const DiscreteSpacetime& st, int f, double t0, const MinimizeOptions& opts = {});

/// Random negative definite frame with f columns (standard spacetime coordinates).
CMatrix random_negative_frame(const DiscreteSpacetime& st, int f, Rng& rng);

/// Scales the positive-coordinate part of `frame` by s in [0, 1) so that T = t0.
/// Returns false when t0 lies outside the attainable range along this path.
bool match_constraint(const DiscreteSpacetime& st, CMatrix& frame, double t0, double rel_tol = 1e-10);

}  // namespace fpl::core
