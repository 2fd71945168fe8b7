#include "fpl/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fpl/linalg.hpp"

namespace fpl::fock {

Mask mask_of(const std::vector<int>& indices) {
  Mask m = 0;
  for (int i : indices) {
    require(i >= 0 && i < kMaxDim, Errc::IndexOutOfRange, "mode index out of range");
    require(!(m & (Mask(1) << i)), Errc::InvalidArgument, "repeated mode index");
    m |= Mask(1) << i;
  }
  return m;
}

std::vector<int> indices_of(Mask m) {
  std::vector<int> out;
  while (m) {
    int i = std::countr_zero(m);
    out.push_back(i);
    m &= m - 1;
  }
  return out;
}

int popcount(Mask m) { return std::popcount(m); }

int fermion_sign(Mask m, int j) {
  Mask below = m & ((Mask(1) << j) - 1);
  return (std::popcount(below) % 2) ? -1 : 1;
}

OneParticleSpace OneParticleSpace::euclidean(int d) {
  require(d >= 0 && d <= kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  return {d, CMatrix::Identity(d, d)};
}

OneParticleSpace OneParticleSpace::with_gram(CMatrix g) {
  require(g.rows() == g.cols(), Errc::DimensionMismatch, "Gram matrix must be square");
  require(g.rows() <= kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  require(is_hermitian(g, 1e-12), Errc::InvalidArgument, "Gram matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
  require(g.rows() == 0 || es.eigenvalues()(0) > 0, Errc::InvalidArgument, "Gram matrix must be positive definite");
  int d = static_cast<int>(g.rows());
  return {d, std::move(g)};
}

SectorBasis::SectorBasis(int d, int n) : d_(d), n_(n) {
  require(d >= 0 && d <= kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  require(n >= 0, Errc::InvalidArgument, "negative particle number");
  if (n > d) return;
  if (n == 0) { masks_.push_back(0); return; }
  // Gosper's hack enumerates n-bit masks in increasing order.
  Mask m = (Mask(1) << n) - 1;
  const std::uint64_t limit = std::uint64_t(1) << d;
  while (m < limit) {
    masks_.push_back(m);
    Mask c = m & (~m + 1);
    std::uint64_t r = std::uint64_t(m) + c;
    if (r >= limit) break;
    m = static_cast<Mask>((((r ^ m) >> 2) / c) | r);
  }
}

int SectorBasis::index(Mask m) const {
  auto it = std::lower_bound(masks_.begin(), masks_.end(), m);
  if (it == masks_.end() || *it != m) return -1;
  return static_cast<int>(it - masks_.begin());
}

FockVector::FockVector(int dim, int sector) : dim_(dim), sector_(sector) {
  require(dim >= 0 && dim <= kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  require(sector >= 0 && sector <= dim, Errc::InvalidArgument, "sector out of range");
}

Complex FockVector::amplitude(Mask m) const {
  auto it = amp_.find(m);
  return it == amp_.end() ? Complex(0) : it->second;
}

void FockVector::add(Mask m, Complex a) {
  require(popcount(m) == sector_, Errc::SectorMismatch, "mask does not belong to this sector");
  require(dim_ == kMaxDim || m < (Mask(1) << dim_), Errc::IndexOutOfRange, "mask exceeds the dimension");
  if (a == Complex(0)) return;
  amp_[m] += a;
}

void FockVector::prune(double tol) {
  for (auto it = amp_.begin(); it != amp_.end();) {
    if (std::abs(it->second) <= tol) it = amp_.erase(it); else ++it;
  }
}

double FockVector::norm2() const {
  double s = 0.0;
  for (const auto& [m, a] : amp_) s += std::norm(a);
  return s;
}

double FockVector::wedge_norm2() const { return norm2() / factorial(sector_); }

CVector FockVector::to_dense() const {
  SectorBasis b(dim_, sector_);
  CVector v = CVector::Zero(b.size());
  for (const auto& [m, a] : amp_) v(b.index(m)) = a;
  return v;
}

FockVector FockVector::from_dense(int dim, int sector, const CVector& v) {
  SectorBasis b(dim, sector);
  require(v.size() == b.size(), Errc::DimensionMismatch, "dense vector does not match the sector");
  FockVector out(dim, sector);
  for (int i = 0; i < b.size(); ++i) out.add(b.mask(i), v(i));
  out.prune();
  return out;
}

static void check_compatible(const FockVector& a, const FockVector& b) {
  require(a.dim() == b.dim(), Errc::DimensionMismatch, "Fock vectors over different spaces");
  require(a.sector() == b.sector(), Errc::SectorMismatch, "Fock vectors in different sectors");
}

FockVector& FockVector::operator+=(const FockVector& o) {
  check_compatible(*this, o);
  for (const auto& [m, a] : o.amp_) amp_[m] += a;
  prune(0.0);
  return *this;
}

FockVector& FockVector::operator-=(const FockVector& o) {
  check_compatible(*this, o);
  for (const auto& [m, a] : o.amp_) amp_[m] -= a;
  prune(0.0);
  return *this;
}

FockVector& FockVector::operator*=(Complex s) {
  for (auto& [m, a] : amp_) a *= s;
  prune();
  return *this;
}

FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
FockVector operator*(Complex s, FockVector a) { return a *= s; }

FockVector vacuum(int dim) {
  FockVector v(dim, 0);
  v.add(0, 1.0);
  return v;
}

FockVector basis_state(int dim, const std::vector<int>& indices) {
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  FockVector v(dim, static_cast<int>(indices.size()));
  for (int i : indices) require(i < dim, Errc::IndexOutOfRange, "mode index exceeds the dimension");
  v.add(mask_of(sorted), 1.0);
  return v;
}

FockVector wedge(const CMatrix& vectors) {
  const int d = static_cast<int>(vectors.rows());
  const int n = static_cast<int>(vectors.cols());
  FockVector out(d, n);
  if (n == 0) { out.add(0, 1.0); return out; }
  std::vector<int> support;
  for (int i = 0; i < d; ++i)
    if (vectors.row(i).cwiseAbs().maxCoeff() > 0.0) support.push_back(i);
  if (static_cast<int>(support.size()) < n) return out;
  require(binomial(static_cast<int>(support.size()), n) <= 5e6, Errc::CapExceeded, "too many Slater amplitudes");
  std::vector<int> cols(n);
  for (int j = 0; j < n; ++j) cols[j] = j;
  for (const auto& s : subsets(static_cast<int>(support.size()), n)) {
    std::vector<int> rows(n);
    for (int k = 0; k < n; ++k) rows[k] = support[s[k]];
    out.add(mask_of(rows), minor_det(vectors, rows, cols));
  }
  out.prune();
  return out;
}

Complex fock_inner(const FockVector& a, const FockVector& b) {
  check_compatible(a, b);
  Complex s = 0.0;
  const auto& small = a.terms() <= b.terms() ? a.amplitudes() : b.amplitudes();
  bool a_small = a.terms() <= b.terms();
  for (const auto& [m, x] : small) {
    Complex y = a_small ? b.amplitude(m) : a.amplitude(m);
    s += a_small ? std::conj(x) * y : std::conj(y) * x;
  }
  return s;
}

Complex fock_inner_wedge(const FockVector& a, const FockVector& b) {
  return fock_inner(a, b) / factorial(a.sector());
}

FockVector create(const CVector& phi, const FockVector& psi) {
  require(phi.size() == psi.dim(), Errc::DimensionMismatch, "one-particle vector has wrong length");
  require(psi.sector() < psi.dim(), Errc::SectorMismatch, "sector is already full");
  FockVector out(psi.dim(), psi.sector() + 1);
  for (const auto& [m, a] : psi.amplitudes())
    for (int j = 0; j < psi.dim(); ++j) {
      if (phi(j) == Complex(0) || (m & (Mask(1) << j))) continue;
      out.add(m | (Mask(1) << j), double(fermion_sign(m, j)) * phi(j) * a);
    }
  out.prune();
  return out;
}

FockVector annihilate(const OneParticleSpace& space, const CVector& phi, const FockVector& psi) {
  require(space.dim == psi.dim() && phi.size() == psi.dim(), Errc::DimensionMismatch,
          "one-particle vector has wrong length");
  require(psi.sector() > 0, Errc::EmptySector, "annihilation on the vacuum sector");
  // <phi|e_j> = conj((G phi)_j)
  CVector gphi = space.gram * phi;
  FockVector out(psi.dim(), psi.sector() - 1);
  for (const auto& [m, a] : psi.amplitudes())
    for (int j : indices_of(m)) {
      if (gphi(j) == Complex(0)) continue;
      out.add(m & ~(Mask(1) << j), double(fermion_sign(m, j)) * std::conj(gphi(j)) * a);
    }
  out.prune();
  return out;
}

FockVector annihilate(const CVector& phi, const FockVector& psi) {
  return annihilate(OneParticleSpace::euclidean(psi.dim()), phi, psi);
}

CMatrix creation_matrix(const CVector& phi, int dim, int n) {
  require(phi.size() == dim, Errc::DimensionMismatch, "one-particle vector has wrong length");
  SectorBasis from(dim, n), to(dim, n + 1);
  CMatrix m = CMatrix::Zero(to.size(), from.size());
  for (int c = 0; c < from.size(); ++c) {
    Mask s = from.mask(c);
    for (int j = 0; j < dim; ++j) {
      if (s & (Mask(1) << j)) continue;
      m(to.index(s | (Mask(1) << j)), c) += double(fermion_sign(s, j)) * phi(j);
    }
  }
  return m;
}

CMatrix annihilation_matrix(const CVector& phi, int dim, int n) {
  require(phi.size() == dim, Errc::DimensionMismatch, "one-particle vector has wrong length");
  require(n > 0, Errc::EmptySector, "annihilation on the vacuum sector");
  SectorBasis from(dim, n), to(dim, n - 1);
  CMatrix m = CMatrix::Zero(to.size(), from.size());
  for (int c = 0; c < from.size(); ++c) {
    Mask s = from.mask(c);
    for (int j : indices_of(s)) m(to.index(s & ~(Mask(1) << j)), c) += double(fermion_sign(s, j)) * std::conj(phi(j));
  }
  return m;
}

const CMatrix& FockOperator::sector(int n) const {
  auto it = sectors.find(n);
  require(it != sectors.end(), Errc::SectorMismatch, "operator not defined on this sector");
  return it->second;
}

FockVector FockOperator::apply(const FockVector& v) const {
  require(v.dim() == dim, Errc::DimensionMismatch, "operator and vector over different spaces");
  return FockVector::from_dense(dim, v.sector(), sector(v.sector()) * v.to_dense());
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  require(a.dim == b.dim, Errc::DimensionMismatch, "operators over different spaces");
  FockOperator out{a.dim, {}};
  for (const auto& [n, m] : a.sectors)
    if (b.has(n)) out.sectors[n] = m * b.sector(n);
  return out;
}

FockOperator operator+(const FockOperator& a, const FockOperator& b) {
  require(a.dim == b.dim, Errc::DimensionMismatch, "operators over different spaces");
  FockOperator out{a.dim, {}};
  for (const auto& [n, m] : a.sectors)
    if (b.has(n)) out.sectors[n] = m + b.sector(n);
  return out;
}

FockOperator operator-(const FockOperator& a, const FockOperator& b) { return a + Complex(-1.0) * b; }

FockOperator operator*(Complex s, const FockOperator& a) {
  FockOperator out = a;
  for (auto& [n, m] : out.sectors) m *= s;
  return out;
}

FockOperator identity_operator(int dim, int max_sector) {
  FockOperator out{dim, {}};
  for (int n = 0; n <= std::min(max_sector, dim); ++n) {
    int sz = SectorBasis(dim, n).size();
    out.sectors[n] = CMatrix::Identity(sz, sz);
  }
  return out;
}

FockOperator lift_one_particle(const CMatrix& o, int max_sector) {
  require(o.rows() == o.cols(), Errc::DimensionMismatch, "one-particle operator must be square");
  const int d = static_cast<int>(o.rows());
  FockOperator out{d, {}};
  for (int n = 0; n <= std::min(max_sector, d); ++n) {
    SectorBasis b(d, n);
    CMatrix m = CMatrix::Zero(b.size(), b.size());
    for (int c = 0; c < b.size(); ++c) {
      std::vector<int> idx = indices_of(b.mask(c));
      for (int k = 0; k < n; ++k) {
        Mask rest = b.mask(c) & ~(Mask(1) << idx[k]);
        for (int j = 0; j < d; ++j) {
          Complex w = o(j, idx[k]);
          if (w == Complex(0) || (rest & (Mask(1) << j))) continue;
          // Sign of sorting the sequence with e_j sitting in slot k.
          int inv = 0;
          for (int q = 0; q < k; ++q) inv += idx[q] > j;
          for (int q = k + 1; q < n; ++q) inv += idx[q] < j;
          m(b.index(rest | (Mask(1) << j)), c) += (inv % 2 ? -1.0 : 1.0) * w;
        }
      }
    }
    out.sectors[n] = m;
  }
  return out;
}

FockOperator lift_via_car(const CMatrix& o, int max_sector) {
  require(o.rows() == o.cols(), Errc::DimensionMismatch, "one-particle operator must be square");
  const int d = static_cast<int>(o.rows());
  FockOperator out{d, {}};
  out.sectors[0] = CMatrix::Zero(1, 1);
  for (int n = 1; n <= std::min(max_sector, d); ++n) {
    int sz = SectorBasis(d, n).size();
    CMatrix m = CMatrix::Zero(sz, sz);
    std::vector<CMatrix> ann(d), cre(d);
    for (int k = 0; k < d; ++k) {
      CVector e = CVector::Unit(d, k);
      cre[k] = creation_matrix(e, d, n - 1);
      ann[k] = annihilation_matrix(e, d, n);
    }
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        if (o(k, l) != Complex(0)) m += o(k, l) * cre[k] * ann[l];
    out.sectors[n] = m;
  }
  return out;
}

FockOperator wick_pair(const CMatrix& o1, const CMatrix& o2, int max_sector) {
  return lift_one_particle(o1, max_sector) * lift_one_particle(o2, max_sector) -
         lift_one_particle(o1 * o2, max_sector);
}

CMatrix compound_matrix(const CMatrix& a, int n) {
  require(a.rows() == a.cols(), Errc::DimensionMismatch, "compound of a non-square matrix");
  const int d = static_cast<int>(a.rows());
  SectorBasis b(d, n);
  CMatrix c(b.size(), b.size());
  std::vector<std::vector<int>> idx(b.size());
  for (int i = 0; i < b.size(); ++i) idx[i] = indices_of(b.mask(i));
  for (int i = 0; i < b.size(); ++i)
    for (int j = 0; j < b.size(); ++j) c(i, j) = minor_det(a, idx[i], idx[j]);
  return c;
}

int projector_rank(const CMatrix& p) {
  require(p.rows() == p.cols(), Errc::DimensionMismatch, "projector must be square");
  require(is_orthogonal_projector(p, 1e-10), Errc::NotAProjector, "matrix is not an orthogonal projector");
  return static_cast<int>(std::lround(p.trace().real()));
}

FockOperator hf_projector(const CMatrix& p) {
  int f = projector_rank(p);
  const int d = static_cast<int>(p.rows());
  require(d <= kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  FockOperator out{d, {}};
  out.sectors[f] = compound_matrix(p, f);
  return out;
}

CMatrix hf_to_projector(const FockOperator& pf, int f) {
  const CMatrix& m = pf.sector(f);
  require(is_orthogonal_projector(m, 1e-10), Errc::NotAProjector, "sector operator is not a projector");
  require(std::abs(m.trace() - Complex(1.0)) < 1e-8, Errc::NotAProjector, "projector is not of rank one");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  CVector top = es.eigenvectors().col(es.eigenvectors().cols() - 1);
  FockVector psi = FockVector::from_dense(pf.dim, f, top);
  if (f == 2) {
    require(is_factorizable_two_particle(psi).factorizable, Errc::NotHartreeFock, "state is not a single wedge");
  }
  CMatrix gamma = one_particle_density(psi);
  require((gamma * gamma - gamma).cwiseAbs().maxCoeff() < 1e-8, Errc::NotHartreeFock,
          "one-particle density is not idempotent");
  return 0.5 * (gamma + gamma.adjoint());
}

CMatrix one_particle_density(const FockVector& psi) {
  const int d = psi.dim();
  double n2 = psi.norm2();
  require(n2 > 0.0, Errc::InvalidArgument, "zero state");
  CMatrix gamma = CMatrix::Zero(d, d);
  if (psi.sector() == 0) return gamma;
  std::vector<FockVector> a(d);
  for (int k = 0; k < d; ++k) a[k] = annihilate(CVector::Unit(d, k), psi);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) gamma(k, l) = fock_inner(a[l], a[k]) / n2;
  return gamma;
}

Complex expectation_one(const CMatrix& p, const CMatrix& o) { return (p * o).trace(); }

Complex expectation_two(const CMatrix& p, const CMatrix& o1, const CMatrix& o2) {
  return (p * o1 * o2).trace() + (p * o1).trace() * (p * o2).trace() - (p * o1 * p * o2).trace();
}

Complex wick_expectation(const CMatrix& p, const CMatrix& o1, const CMatrix& o2) {
  return (p * o1).trace() * (p * o2).trace() - (p * o1 * p * o2).trace();
}

double TwoBodyKernel::antisymmetry_defect() const {
  double dmax = 0.0;
  for (int a = 0; a < d_; ++a)
    for (int b = 0; b < d_; ++b)
      for (int c = 0; c < d_; ++c)
        for (int e = 0; e < d_; ++e) {
          dmax = std::max(dmax, std::abs((*this)(a, b, c, e) + (*this)(b, a, c, e)));
          dmax = std::max(dmax, std::abs((*this)(a, b, c, e) + (*this)(a, b, e, c)));
        }
  return dmax;
}

TwoBodyKernel TwoBodyKernel::transformed(const CMatrix& v) const {
  require(v.rows() == d_ && v.cols() == d_, Errc::DimensionMismatch, "basis change has wrong size");
  const int d = d_;
  // Contract one index at a time.
  std::vector<Complex> t1(data_.size()), t2(data_.size());
  auto at = [d](int a, int b, int c, int e) { return ((a * d + b) * d + c) * d + e; };
  CMatrix vc = v.conjugate();
  for (int a = 0; a < d; ++a) for (int b = 0; b < d; ++b) for (int c = 0; c < d; ++c) for (int l2 = 0; l2 < d; ++l2) {
    Complex s = 0; for (int e = 0; e < d; ++e) s += data_[at(a, b, c, e)] * v(e, l2); t1[at(a, b, c, l2)] = s; }
  for (int a = 0; a < d; ++a) for (int b = 0; b < d; ++b) for (int l1 = 0; l1 < d; ++l1) for (int l2 = 0; l2 < d; ++l2) {
    Complex s = 0; for (int c = 0; c < d; ++c) s += t1[at(a, b, c, l2)] * v(c, l1); t2[at(a, b, l1, l2)] = s; }
  for (int a = 0; a < d; ++a) for (int k2 = 0; k2 < d; ++k2) for (int l1 = 0; l1 < d; ++l1) for (int l2 = 0; l2 < d; ++l2) {
    Complex s = 0; for (int b = 0; b < d; ++b) s += vc(b, k2) * t2[at(a, b, l1, l2)]; t1[at(a, k2, l1, l2)] = s; }
  TwoBodyKernel out(d);
  for (int k1 = 0; k1 < d; ++k1) for (int k2 = 0; k2 < d; ++k2) for (int l1 = 0; l1 < d; ++l1) for (int l2 = 0; l2 < d; ++l2) {
    Complex s = 0; for (int a = 0; a < d; ++a) s += vc(a, k1) * t1[at(a, k2, l1, l2)]; out(k1, k2, l1, l2) = s; }
  return out;
}

TwoBodyKernel pair_kernel(const CMatrix& o1, const CMatrix& o2) {
  require(o1.rows() == o2.rows() && o1.rows() == o1.cols() && o2.rows() == o2.cols(), Errc::DimensionMismatch,
          "one-particle operators of different size");
  const int d = static_cast<int>(o1.rows());
  TwoBodyKernel g(d);
  for (int k1 = 0; k1 < d; ++k1)
    for (int k2 = 0; k2 < d; ++k2)
      for (int l1 = 0; l1 < d; ++l1)
        for (int l2 = 0; l2 < d; ++l2)
          g(k1, k2, l1, l2) = 0.5 * (o1(k1, l1) * o2(k2, l2) - o1(k2, l1) * o2(k1, l2) - o1(k1, l2) * o2(k2, l1) +
                                     o1(k2, l2) * o2(k1, l1));
  return g;
}

FockOperator two_body_operator(const TwoBodyKernel& g, int max_sector) {
  const int d = g.dim();
  FockOperator out{d, {}};
  for (int n = 0; n <= std::min(max_sector, d); ++n) {
    int sz = SectorBasis(d, n).size();
    CMatrix m = CMatrix::Zero(sz, sz);
    if (n >= 2) {
      std::vector<CMatrix> ann(d * d), cre(d * d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          CVector ea = CVector::Unit(d, a), eb = CVector::Unit(d, b);
          // a_{l2} a_{l1} with (l1, l2) = (a, b), and a^+_{k1} a^+_{k2} with (k1, k2) = (a, b)
          ann[a * d + b] = annihilation_matrix(eb, d, n - 1) * annihilation_matrix(ea, d, n);
          cre[a * d + b] = creation_matrix(ea, d, n - 1) * creation_matrix(eb, d, n - 2);
        }
      for (int k1 = 0; k1 < d; ++k1)
        for (int k2 = 0; k2 < d; ++k2)
          for (int l1 = 0; l1 < d; ++l1)
            for (int l2 = 0; l2 < d; ++l2) {
              Complex w = g(k1, k2, l1, l2);
              if (w != Complex(0)) m += 0.5 * w * cre[k1 * d + k2] * ann[l1 * d + l2];
            }
    }
    out.sectors[n] = m;
  }
  return out;
}

Complex wick_expectation(const CMatrix& p, const TwoBodyKernel& g) {
  require(p.rows() == g.dim() && p.cols() == g.dim(), Errc::DimensionMismatch, "kernel and projector sizes differ");
  double scale = 1.0;
  const int d = g.dim();
  for (int a = 0; a < d; ++a) for (int b = 0; b < d; ++b) for (int c = 0; c < d; ++c) for (int e = 0; e < d; ++e)
    scale = std::max(scale, std::abs(g(a, b, c, e)));
  require(g.antisymmetry_defect() <= 1e-12 * scale, Errc::KernelNotAntisymmetric, "kernel is not antisymmetric");
  projector_rank(p);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (p + p.adjoint()));
  const CMatrix& v = es.eigenvectors();
  TwoBodyKernel gt = g.transformed(v);
  CMatrix pt = v.adjoint() * p * v;
  Complex s = 0.0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      if (k != l) s += (pt(k, k) * pt(l, l) - pt(k, l) * pt(l, k)) * gt(k, l, k, l);
  return s;
}

Factorization is_factorizable_two_particle(const FockVector& psi, double rel_cutoff) {
  require(psi.sector() == 2, Errc::WrongSector, "factorization test needs a two-particle vector");
  const int d = psi.dim();
  CMatrix c = CMatrix::Zero(d, d);
  for (const auto& [m, a] : psi.amplitudes()) {
    auto idx = indices_of(m);
    c(idx[0], idx[1]) = a;
    c(idx[1], idx[0]) = -a;
  }
  Factorization out;
  out.first = CVector::Zero(d);
  out.second = CVector::Zero(d);
  Eigen::JacobiSVD<CMatrix> svd(c, Eigen::ComputeFullU);
  const RVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) { out.factorizable = true; return out; }
  for (int i = 0; i < s.size(); ++i) out.rank += s(i) > rel_cutoff * s(0);
  out.factorizable = out.rank <= 2;
  if (!out.factorizable) return out;
  CVector u1 = svd.matrixU().col(0), u2 = svd.matrixU().col(1);
  Complex num = 0.0;
  double den = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Complex dij = u1(i) * u2(j) - u1(j) * u2(i);
      num += std::conj(dij) * c(i, j);
      den += std::norm(dij);
    }
  out.first = (num / den) * u1;
  out.second = u2;
  return out;
}

}  // namespace fpl::fock
