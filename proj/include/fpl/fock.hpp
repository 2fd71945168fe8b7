#pragma once

// Fermionic Fock spaces over a finite orthonormal one-particle basis.
//
// Amplitude convention: a FockVector stores coefficients a_I with respect to the
// orthonormal Slater basis e_I (I an ascending index set). The wedge
// v_1 ^ ... ^ v_n of one-particle vectors is stored with a_I = det(V_I), i.e.
// sqrt(n!) times its coordinates in the normalization where a wedge of
// orthonormal vectors has squared norm 1/n!. `fock_inner` is the Slater inner
// product; `fock_inner_wedge` divides by n! and reproduces the 1/n! normalization.

#include <cstdint>
#include <map>
#include <vector>

#include "fpl/common.hpp"

namespace fpl::fock {

using Mask = std::uint32_t;
constexpr int kMaxDim = 24;

Mask mask_of(const std::vector<int>& indices);
std::vector<int> indices_of(Mask m);
int popcount(Mask m);
/// (-1)^(number of occupied modes below j).
int fermion_sign(Mask m, int j);

/// One-particle space C^d with Gram matrix (identity unless given).
struct OneParticleSpace {
  int dim = 0;
  CMatrix gram;

  static OneParticleSpace euclidean(int d);
  static OneParticleSpace with_gram(CMatrix g);
  Complex inner(const CVector& u, const CVector& v) const { return u.dot(gram * v); }
};

/// Ascending list of the masks of all n-subsets of {0..d-1}.
class SectorBasis {
 public:
  SectorBasis(int d, int n);
  int dim() const { return d_; }
  int sector() const { return n_; }
  int size() const { return static_cast<int>(masks_.size()); }
  Mask mask(int i) const { return masks_[i]; }
  /// Position of `m`, or -1.
  int index(Mask m) const;
  const std::vector<Mask>& masks() const { return masks_; }

 private:
  int d_, n_;
  std::vector<Mask> masks_;
};

class FockVector {
 public:
  FockVector() = default;
  FockVector(int dim, int sector);

  int dim() const { return dim_; }
  int sector() const { return sector_; }
  const std::map<Mask, Complex>& amplitudes() const { return amp_; }
  Complex amplitude(Mask m) const;
  Complex amplitude(const std::vector<int>& indices) const { return amplitude(mask_of(indices)); }
  void add(Mask m, Complex a);
  /// Drops amplitudes of modulus at most `tol`.
  void prune(double tol = 1e-14);
  std::size_t terms() const { return amp_.size(); }

  double norm2() const;
  double wedge_norm2() const;

  CVector to_dense() const;
  static FockVector from_dense(int dim, int sector, const CVector& v);

  FockVector& operator+=(const FockVector& o);
  FockVector& operator-=(const FockVector& o);
  FockVector& operator*=(Complex s);

 private:
  int dim_ = 0;
  int sector_ = 0;
  std::map<Mask, Complex> amp_;
};

FockVector operator+(FockVector a, const FockVector& b);
FockVector operator-(FockVector a, const FockVector& b);
FockVector operator*(Complex s, FockVector a);

FockVector vacuum(int dim);
FockVector basis_state(int dim, const std::vector<int>& indices);
/// Wedge of the columns of `vectors` (d x n).
FockVector wedge(const CMatrix& vectors);

Complex fock_inner(const FockVector& a, const FockVector& b);
Complex fock_inner_wedge(const FockVector& a, const FockVector& b);

/// a^+(phi) psi = phi ^ psi.
FockVector create(const CVector& phi, const FockVector& psi);
/// a(phi), antilinear in phi with respect to the Gram matrix of `space`.
FockVector annihilate(const OneParticleSpace& space, const CVector& phi, const FockVector& psi);
FockVector annihilate(const CVector& phi, const FockVector& psi);

/// Dense a^+(phi): sector n -> n+1, and a(phi): n -> n-1.
CMatrix creation_matrix(const CVector& phi, int dim, int n);
CMatrix annihilation_matrix(const CVector& phi, int dim, int n);

/// Particle-number preserving operator, stored sector by sector.
struct FockOperator {
  int dim = 0;
  std::map<int, CMatrix> sectors;

  bool has(int n) const { return sectors.count(n) != 0; }
  const CMatrix& sector(int n) const;
  FockVector apply(const FockVector& v) const;
};

FockOperator operator*(const FockOperator& a, const FockOperator& b);
FockOperator operator+(const FockOperator& a, const FockOperator& b);
FockOperator operator-(const FockOperator& a, const FockOperator& b);
FockOperator operator*(Complex s, const FockOperator& a);
FockOperator identity_operator(int dim, int max_sector);

/// Second quantization of a one-particle operator: acts slot by slot on wedges.
FockOperator lift_one_particle(const CMatrix& o, int max_sector);
/// Same operator assembled as sum_{kl} O_kl a^+_k a_l from dense CAR matrices.
FockOperator lift_via_car(const CMatrix& o, int max_sector);
/// :O1^F O2^F: = O1^F O2^F - (O1 O2)^F.
FockOperator wick_pair(const CMatrix& o1, const CMatrix& o2, int max_sector);

/// n-th compound matrix (n x n minors) in SectorBasis order.
CMatrix compound_matrix(const CMatrix& a, int n);

/// Hartree-Fock projector P_f onto the wedge of the image of P (f = rank P).
FockOperator hf_projector(const CMatrix& p);
int projector_rank(const CMatrix& p);
/// Inverse of hf_projector: recovers P from a rank-one projector on sector f.
CMatrix hf_to_projector(const FockOperator& pf, int f);

/// gamma_{kl} = <psi| a^+_l a_k |psi> / <psi|psi>.
CMatrix one_particle_density(const FockVector& psi);

/// <O^F> = Tr(P O).
Complex expectation_one(const CMatrix& p, const CMatrix& o);
/// <O1^F O2^F> = Tr(P O1 O2) + Tr(P O1) Tr(P O2) - Tr(P O1 P O2).
Complex expectation_two(const CMatrix& p, const CMatrix& o1, const CMatrix& o2);
/// <:O1^F O2^F:> = Tr(P O1) Tr(P O2) - Tr(P O1 P O2).
Complex wick_expectation(const CMatrix& p, const CMatrix& o1, const CMatrix& o2);

/// Two-body kernel g(k1,k2,l1,l2) for :O: = 1/2 sum g a^+_{k1} a^+_{k2} a_{l2} a_{l1}.
class TwoBodyKernel {
 public:
  explicit TwoBodyKernel(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d * d, Complex(0)) {}
  int dim() const { return d_; }
  Complex& operator()(int k1, int k2, int l1, int l2) { return data_[((k1 * d_ + k2) * d_ + l1) * d_ + l2]; }
  Complex operator()(int k1, int k2, int l1, int l2) const { return data_[((k1 * d_ + k2) * d_ + l1) * d_ + l2]; }
  /// Largest violation of antisymmetry in either index pair.
  double antisymmetry_defect() const;
  /// g'(k1,k2,l1,l2) in the basis given by the columns of the unitary v.
  TwoBodyKernel transformed(const CMatrix& v) const;

 private:
  int d_;
  std::vector<Complex> data_;
};

/// Kernel whose operator equals :O1^F O2^F:.
TwoBodyKernel pair_kernel(const CMatrix& o1, const CMatrix& o2);
FockOperator two_body_operator(const TwoBodyKernel& g, int max_sector);
/// sum_{k != l} (P_kk P_ll - P_kl P_lk) g(k,l,k,l), evaluated in an eigenbasis of P.
Complex wick_expectation(const CMatrix& p, const TwoBodyKernel& g);

struct Factorization {
  bool factorizable = false;
  int rank = 0;  // rank of the antisymmetric coefficient matrix
  CVector first;
  CVector second;
};

/// Decides whether a two-particle vector is a single wedge u ^ v.
Factorization is_factorizable_two_particle(const FockVector& psi, double rel_cutoff = 1e-9);

}  // namespace fpl::fock
