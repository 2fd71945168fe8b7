#pragma once

// Reduction of a Hartree-Fock state to a subsystem: density operators on the
// Fock space of an inner one-particle subspace, the minor representation of
// their coefficients, and projector approximations of correlated states.

#include <cstdint>
#include <vector>

#include "fpl/common.hpp"
#include "fpl/fock.hpp"

namespace fpl::subsystem {

/// Orthogonal decomposition H = I (+) O given by the projector onto I.
struct SubsystemSplit {
  CMatrix inner;
  CMatrix outer;

  int dim() const { return static_cast<int>(inner.rows()); }
  int inner_dim() const;
  int outer_dim() const;

  static SubsystemSplit from_projector(const CMatrix& inner_projector);
  /// Inner subspace spanned by the listed coordinate directions.
  static SubsystemSplit coordinate(int dim, const std::vector<int>& inner_indices);
};

/// Density operator on the inner Fock space, one block per particle number
/// g = 0..f. Blocks are written in the Slater basis of the full one-particle
/// space and are supported on the inner wedges.
struct FockDensityOperator {
  int dim = 0;
  int particles = 0;
  std::vector<CMatrix> sectors;

  Complex trace() const;
  /// Tr(rho O) for a particle-number preserving O defined on sectors 0..f.
  Complex expectation(const fock::FockOperator& o) const;
  double distance(const FockDensityOperator& other) const;
};

/// A_ij = <psi_i^O | psi_j^O> for the columns of `states`.
CMatrix outer_gram(const CMatrix& states, const SubsystemSplit& split);

/// Density from the partial trace over the outer factors.
FockDensityOperator density_partial_trace(const CMatrix& states, const SubsystemSplit& split);

struct MinorsOptions {
  std::vector<double> ladder{1e-4, 1e-6, 1e-8};  // epsilon / ||A||
  double agreement = 1e-5;
};

/// Same density, with coefficients lim det(A + eps) det((A + eps)^{-1} minors).
FockDensityOperator density_minors(const CMatrix& states, const SubsystemSplit& split, const MinorsOptions& opts = {});

struct MinorIdentity {
  double residual = 0.0;
  double condition = 0.0;
};

/// Checks det A_{O',O} = sign(I') sign(I) det A det (A^{-1})_{I,I'}.
MinorIdentity minor_identity(const CMatrix& a, const std::vector<int>& i, const std::vector<int>& i_prime);

struct ProjectorApproximation {
  CMatrix projector;
  RVector occupations;  // eigenvalues of the one-particle density
  CMatrix frame;        // orthonormal columns psi_k^tot
};

/// One-particle projector with the same one-particle expectations as psi.
ProjectorApproximation approx_by_projector(const fock::FockVector& psi, const SubsystemSplit& split);

struct NoGoCertificate {
  double tr_up = 0, tr_down = 0;
  double tr_up2 = 0, tr_down2 = 0, tr_updown = 0;
  std::vector<double> values;      // <S_up>, <S_down>, <:S_up S_down:>, <:S_up S_up:>, <:S_down S_down:>
  std::vector<double> deviations;  // |value - target|
  double residual = 0;             // max deviation r(P)
  double hs_norm2 = 0;             // ||T_up + T_down||^2
  double hs_identity_residual = 0;
};

/// Targets 1/2, 1/2, 1/2, 0, 0 evaluated on the Hartree-Fock state of p.
NoGoCertificate singlet_nogo_certificate(const CMatrix& p, const CMatrix& s_up_a, const CMatrix& s_down_b);

struct NoGoSearch {
  int samples = 0;
  double floor = 0;
  int floor_rank = 0;
  double max_hs_identity_residual = 0;
  bool any_zero = false;
};

/// Random projectors of rank 1..max_rank on C^dim; spin operators act on modes 0 and 3.
NoGoSearch nogo_random_search(int dim, int max_rank, int samples, std::uint64_t seed);

}  // namespace fpl::subsystem
