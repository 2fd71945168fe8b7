#include "fpl/subsystem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fpl/linalg.hpp"
#include "fpl/random.hpp"

namespace fpl::subsystem {

using fock::FockVector;
using fock::SectorBasis;

int SubsystemSplit::inner_dim() const { return static_cast<int>(std::lround(inner.trace().real())); }
int SubsystemSplit::outer_dim() const { return static_cast<int>(std::lround(outer.trace().real())); }

SubsystemSplit SubsystemSplit::from_projector(const CMatrix& inner_projector) {
  require(is_orthogonal_projector(inner_projector, 1e-10), Errc::NotAProjector,
          "inner subspace must be given by an orthogonal projector");
  const int d = static_cast<int>(inner_projector.rows());
  require(d <= fock::kMaxDim, Errc::InvalidArgument, "one-particle dimension must be at most 24");
  return {inner_projector, CMatrix::Identity(d, d) - inner_projector};
}

SubsystemSplit SubsystemSplit::coordinate(int dim, const std::vector<int>& inner_indices) {
  CMatrix p = CMatrix::Zero(dim, dim);
  for (int i : inner_indices) {
    require(i >= 0 && i < dim, Errc::IndexOutOfRange, "inner index out of range");
    p(i, i) = 1.0;
  }
  return from_projector(p);
}

Complex FockDensityOperator::trace() const {
  Complex t = 0.0;
  for (const auto& s : sectors) t += s.trace();
  return t;
}

Complex FockDensityOperator::expectation(const fock::FockOperator& o) const {
  Complex t = 0.0;
  for (int g = 0; g < static_cast<int>(sectors.size()); ++g) t += (sectors[g] * o.sector(g)).trace();
  return t;
}

double FockDensityOperator::distance(const FockDensityOperator& other) const {
  require(sectors.size() == other.sectors.size(), Errc::SectorMismatch, "density operators with different sectors");
  double d = 0.0;
  for (std::size_t g = 0; g < sectors.size(); ++g)
    d = std::max(d, (sectors[g] - other.sectors[g]).cwiseAbs().maxCoeff());
  return d;
}

namespace {

void check_states(const CMatrix& states, const SubsystemSplit& split) {
  require(states.rows() == split.dim(), Errc::DimensionMismatch, "states and split over different spaces");
  const int f = static_cast<int>(states.cols());
  double defect = (states.adjoint() * states - CMatrix::Identity(f, f)).cwiseAbs().maxCoeff();
  require(defect <= 1e-10, Errc::NotOrthonormal, "one-particle states are not orthonormal");
}

// Dense Slater vectors of the inner wedges Psi^I, indexed like subsets(f, g).
std::vector<CVector> inner_wedges(const CMatrix& inner_states, int g) {
  std::vector<CVector> out;
  for (const auto& idx : subsets(static_cast<int>(inner_states.cols()), g)) {
    CMatrix v(inner_states.rows(), g);
    for (int k = 0; k < g; ++k) v.col(k) = inner_states.col(idx[k]);
    out.push_back(fock::wedge(v).to_dense());
  }
  return out;
}

template <typename Coefficient>
FockDensityOperator assemble(const CMatrix& states, const SubsystemSplit& split, Coefficient coeff) {
  const int d = split.dim();
  const int f = static_cast<int>(states.cols());
  CMatrix inner_states = split.inner * states;
  FockDensityOperator rho;
  rho.dim = d;
  rho.particles = f;
  for (int g = 0; g <= f; ++g) {
    SectorBasis b(d, g);
    CMatrix m = CMatrix::Zero(b.size(), b.size());
    auto sets = subsets(f, g);
    auto w = inner_wedges(inner_states, g);
    for (std::size_t a = 0; a < sets.size(); ++a)
      for (std::size_t c = 0; c < sets.size(); ++c) {
        Complex k = coeff(sets[a], sets[c]);
        if (k != Complex(0)) m += k * w[a] * w[c].adjoint();
      }
    rho.sectors.push_back(m);
  }
  return rho;
}

}  // namespace

CMatrix outer_gram(const CMatrix& states, const SubsystemSplit& split) {
  CMatrix o = split.outer * states;
  return o.adjoint() * o;
}

FockDensityOperator density_partial_trace(const CMatrix& states, const SubsystemSplit& split) {
  check_states(states, split);
  const int f = static_cast<int>(states.cols());
  CMatrix a = outer_gram(states, split);
  return assemble(states, split, [&](const std::vector<int>& i, const std::vector<int>& ip) {
    auto o = complement(i, f);
    auto op = complement(ip, f);
    return double(multi_index_sign(i) * multi_index_sign(ip)) * minor_det(a, op, o);
  });
}

FockDensityOperator density_minors(const CMatrix& states, const SubsystemSplit& split, const MinorsOptions& opts) {
  check_states(states, split);
  require(opts.ladder.size() >= 2, Errc::InvalidArgument, "epsilon ladder needs two entries");
  const int f = static_cast<int>(states.cols());
  CMatrix a = outer_gram(states, split);
  double scale = a.norm();
  if (scale == 0.0) scale = 1.0;

  const std::size_t nl = opts.ladder.size();
  std::vector<double> eps(nl), det_a(nl);
  std::vector<CMatrix> inv(nl);
  for (std::size_t k = 0; k < nl; ++k) {
    eps[k] = opts.ladder[k] * scale;
    CMatrix ae = a + eps[k] * CMatrix::Identity(f, f);
    Eigen::PartialPivLU<CMatrix> lu(ae);
    det_a[k] = lu.determinant().real();
    inv[k] = lu.inverse();
  }
  return assemble(states, split, [&](const std::vector<int>& i, const std::vector<int>& ip) {
    std::vector<Complex> v(nl);
    for (std::size_t k = 0; k < nl; ++k) v[k] = det_a[k] * minor_det(inv[k], i, ip);
    Complex last = v[nl - 1], prev = v[nl - 2];
    if (std::abs(last - prev) > opts.agreement * std::max(1.0, std::abs(last)))
      fail(Errc::LimitUnstable, "epsilon ladder values disagree");
    // The product is a polynomial in eps; extrapolate linearly to eps = 0.
    double e1 = eps[nl - 2], e2 = eps[nl - 1];
    return (e1 * last - e2 * prev) / (e1 - e2);
  });
}

MinorIdentity minor_identity(const CMatrix& a, const std::vector<int>& i, const std::vector<int>& i_prime) {
  require(a.rows() == a.cols(), Errc::DimensionMismatch, "matrix must be square");
  require(i.size() == i_prime.size(), Errc::DimensionMismatch, "index sets of different size");
  const int n = static_cast<int>(a.rows());
  for (int k : i) require(k >= 0 && k < n, Errc::IndexOutOfRange, "index out of range");
  for (int k : i_prime) require(k >= 0 && k < n, Errc::IndexOutOfRange, "index out of range");
  Eigen::JacobiSVD<CMatrix> svd(a);
  const RVector& s = svd.singularValues();
  MinorIdentity out;
  out.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  require(out.condition < 1e12, Errc::Singular, "matrix is numerically singular");
  CMatrix b = a.inverse();
  Complex lhs = minor_det(a, complement(i_prime, n), complement(i, n));
  Complex rhs = double(multi_index_sign(i_prime) * multi_index_sign(i)) * det(a) * minor_det(b, i, i_prime);
  out.residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
  return out;
}

ProjectorApproximation approx_by_projector(const FockVector& psi, const SubsystemSplit& split) {
  require(psi.dim() == split.dim(), Errc::DimensionMismatch, "state and split over different spaces");
  const int d = split.dim();
  CMatrix gamma = fock::one_particle_density(psi);
  require((split.outer * gamma).cwiseAbs().maxCoeff() <= 1e-10, Errc::InvalidArgument,
          "state is not supported in the inner subspace");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (gamma + gamma.adjoint()));
  const double tol = 1e-12;

  // Padding directions: projections of e_0, e_1, ... onto O, orthonormalized in order.
  std::vector<CVector> pad;
  for (int j = 0; j < d; ++j) {
    CVector v = split.outer.col(j);
    for (const auto& p : pad) v -= p.dot(v) * p;
    for (const auto& p : pad) v -= p.dot(v) * p;
    double nv = v.norm();
    if (nv > 1e-8) pad.push_back(v / nv);
  }

  ProjectorApproximation out;
  out.occupations = es.eigenvalues().reverse();
  std::vector<CVector> cols;
  std::size_t next_pad = 0;
  for (int k = d - 1; k >= 0; --k) {
    double rho = std::clamp(es.eigenvalues()(k), 0.0, 1.0);
    if (rho <= tol) continue;
    CVector v = std::sqrt(rho) * es.eigenvectors().col(k);
    if (rho < 1.0 - tol) {
      require(next_pad < pad.size(), Errc::InsufficientOuterDim, "outer subspace too small for padding");
      v += std::sqrt(1.0 - rho) * pad[next_pad++];
    }
    cols.push_back(v);
  }
  out.frame.resize(d, static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.frame.col(c) = cols[c];
  out.projector = out.frame * out.frame.adjoint();
  return out;
}

NoGoCertificate singlet_nogo_certificate(const CMatrix& p, const CMatrix& s_up_a, const CMatrix& s_down_b) {
  require(p.rows() == s_up_a.rows() && p.rows() == s_down_b.rows(), Errc::DimensionMismatch, "operator sizes differ");
  require(is_orthogonal_projector(p, 1e-10), Errc::NotAProjector, "P must be an orthogonal projector");
  CMatrix ta = p * s_up_a * p;
  CMatrix tb = p * s_down_b * p;
  NoGoCertificate c;
  c.tr_up = ta.trace().real();
  c.tr_down = tb.trace().real();
  c.tr_up2 = (ta * ta).trace().real();
  c.tr_down2 = (tb * tb).trace().real();
  c.tr_updown = (ta * tb).trace().real();
  c.values = {c.tr_up, c.tr_down, c.tr_up * c.tr_down - c.tr_updown, c.tr_up * c.tr_up - c.tr_up2,
              c.tr_down * c.tr_down - c.tr_down2};
  const double targets[5] = {0.5, 0.5, 0.5, 0.0, 0.0};
  for (int k = 0; k < 5; ++k) {
    c.deviations.push_back(std::abs(c.values[k] - targets[k]));
    c.residual = std::max(c.residual, c.deviations.back());
  }
  c.hs_norm2 = (ta + tb).squaredNorm();
  c.hs_identity_residual = std::abs(c.hs_norm2 - (c.tr_up2 + 2.0 * c.tr_updown + c.tr_down2));
  return c;
}

NoGoSearch nogo_random_search(int dim, int max_rank, int samples, std::uint64_t seed) {
  require(dim >= 4 && max_rank >= 1 && max_rank <= dim, Errc::InvalidArgument, "bad search parameters");
  CMatrix su = CMatrix::Zero(dim, dim), sd = CMatrix::Zero(dim, dim);
  su(0, 0) = 1.0;
  sd(3, 3) = 1.0;
  NoGoSearch out;
  out.samples = samples;
  out.floor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Rng rng = stream(seed, static_cast<std::uint64_t>(i));
    int rank = 1 + i % max_rank;
    CMatrix g = complex_gaussian(dim, rank, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(dim, rank);
    auto c = singlet_nogo_certificate(q * q.adjoint(), su, sd);
    out.max_hs_identity_residual = std::max(out.max_hs_identity_residual, c.hs_identity_residual);
    if (c.residual <= 0.0) out.any_zero = true;
    if (c.residual < out.floor) { out.floor = c.residual; out.floor_rank = rank; }
  }
  return out;
}

}  // namespace fpl::subsystem
