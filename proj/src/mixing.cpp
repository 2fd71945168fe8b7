#include "fpl/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fpl/linalg.hpp"

namespace fpl::mixing {

using fock::FockVector;

RegionPartition RegionPartition::from_labels(std::vector<int> labels) {
  require(!labels.empty(), Errc::InvalidArgument, "empty partition");
  int regions = 0;
  for (int l : labels) {
    require(l >= 0, Errc::InvalidArgument, "negative region label");
    regions = std::max(regions, l + 1);
  }
  std::vector<int> count(regions, 0);
  for (int l : labels) ++count[l];
  for (int c : count) require(c > 0, Errc::InvalidArgument, "empty region");
  return {std::move(labels), regions};
}

void MixedSystem::validate() const {
  require(components >= 1, Errc::InvalidArgument, "need at least one internal component");
  require(states.rows() == static_cast<Eigen::Index>(sites()) * components, Errc::DimensionMismatch,
          "states do not match sites x components");
  if (!decoherence.empty()) {
    require(static_cast<int>(decoherence.size()) == partition.regions, Errc::DimensionMismatch,
            "need one decoherence unitary per region");
    for (const auto& u : decoherence) {
      require(u.rows() == particles() && u.cols() == particles(), Errc::DimensionMismatch, "decoherence size");
      require(is_special_unitary(u), Errc::NotSpecialUnitary, "decoherence matrix must lie in SU(f)");
    }
  }
}

CMatrix region_restriction(const MixedSystem& sys, int region) {
  require(region >= 0 && region < sys.partition.regions, Errc::IndexOutOfRange, "region out of range");
  CMatrix out = CMatrix::Zero(sys.dim(), sys.particles());
  for (int x = 0; x < sys.sites(); ++x)
    if (sys.partition.labels[x] == region)
      out.middleRows(x * sys.components, sys.components) = sys.states.middleRows(x * sys.components, sys.components);
  return out;
}

CMatrix decohered_states(const MixedSystem& sys) {
  sys.validate();
  if (sys.decoherence.empty()) return sys.states;
  CMatrix out = CMatrix::Zero(sys.dim(), sys.particles());
  for (int a = 0; a < sys.partition.regions; ++a) out += region_restriction(sys, a) * sys.decoherence[a].transpose();
  return out;
}

WedgeSum WedgeSum::single(const CMatrix& factors, Complex coef) {
  WedgeSum w;
  w.dim = static_cast<int>(factors.rows());
  w.sector = static_cast<int>(factors.cols());
  w.terms.push_back({coef, factors});
  return w;
}

FockVector WedgeSum::to_fock() const {
  require(dim <= fock::kMaxDim, Errc::CapExceeded, "one-particle space too large for Fock vectors");
  FockVector out(dim, sector);
  for (const auto& t : terms) out += t.coef * fock::wedge(t.factors);
  return out;
}

std::vector<WedgeSum> subsystem_wedges(const MixedSystem& sys) {
  sys.validate();
  MixedSystem d = sys;
  d.states = decohered_states(sys);
  d.decoherence.clear();
  std::vector<WedgeSum> out;
  for (int a = 0; a < sys.partition.regions; ++a) out.push_back(WedgeSum::single(region_restriction(d, a)));
  return out;
}

std::vector<FockVector> subsystem_wavefunctions(const MixedSystem& sys) {
  require(sys.dim() <= fock::kMaxDim, Errc::CapExceeded, "one-particle space too large for Fock vectors");
  std::vector<FockVector> out;
  for (const auto& w : subsystem_wedges(sys)) out.push_back(w.to_fock());
  return out;
}

CMatrix cross_kernel(const MixedSystem& sys, int x, int y) {
  require(x >= 0 && x < sys.sites() && y >= 0 && y < sys.sites(), Errc::IndexOutOfRange, "site out of range");
  CMatrix s = decohered_states(sys);
  const int c = sys.components;
  return -s.middleRows(x * c, c) * s.middleRows(y * c, c).adjoint();
}

bool is_special_unitary(const CMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  const int f = static_cast<int>(u.rows());
  if ((u.adjoint() * u - CMatrix::Identity(f, f)).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(det(u) - Complex(1.0)) <= tol;
}

CMatrix haar_unitary(int f, Rng& rng) {
  require(f >= 1, Errc::InvalidArgument, "f must be positive");
  CMatrix g = complex_gaussian(f, f, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < f; ++j) {
    Complex d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= (a > 0 ? d / a : Complex(1.0));
  }
  return q;
}

CMatrix haar_sample(int f, Rng& rng) {
  require(f >= 2, Errc::InvalidArgument, "SU(f) sampling needs f >= 2");
  CMatrix u = haar_unitary(f, rng);
  Complex d = det(u);
  return u * std::polar(1.0, -std::arg(d) / f);
}

bool Estimate::within(Complex target, double k) const {
  double dr = std::abs(mean.real() - target.real());
  double di = std::abs(mean.imag() - target.imag());
  bool ok_r = se_real > 0 ? dr <= k * se_real : dr <= 1e-14;
  bool ok_i = se_imag > 0 ? di <= k * se_imag : di <= 1e-14;
  return ok_r && ok_i;
}

double Estimate::deviation_in_se(Complex target) const {
  double dr = std::abs(mean.real() - target.real());
  double di = std::abs(mean.imag() - target.imag());
  double zr = se_real > 0 ? dr / se_real : (dr <= 1e-14 ? 0.0 : std::numeric_limits<double>::infinity());
  double zi = se_imag > 0 ? di / se_imag : (di <= 1e-14 ? 0.0 : std::numeric_limits<double>::infinity());
  return std::max(zr, zi);
}

void Accumulator::add(Complex z) {
  ++n_;
  sr_ += z.real();
  si_ += z.imag();
  srr_ += z.real() * z.real();
  sii_ += z.imag() * z.imag();
}

Estimate Accumulator::estimate() const {
  Estimate e;
  e.samples = n_;
  if (n_ == 0) return e;
  double mr = sr_ / n_, mi = si_ / n_;
  e.mean = {mr, mi};
  if (n_ > 1) {
    double vr = std::max(0.0, (srr_ - n_ * mr * mr) / (n_ - 1));
    double vi = std::max(0.0, (sii_ - n_ * mi * mi) / (n_ - 1));
    e.se_real = std::sqrt(vr / n_);
    e.se_imag = std::sqrt(vi / n_);
  }
  return e;
}

namespace {

// Two-site system with in-phase values: every psi_j(x) = u, every psi_k(y) = v.
MixedSystem in_phase_pair(int f) {
  MixedSystem sys;
  sys.components = 2;
  sys.partition = RegionPartition::from_labels({0, 1});
  sys.states = CMatrix::Zero(4, f);
  CVector u(2), v(2);
  u << Complex(0.6, 0.0), Complex(0.0, 0.8);
  v << Complex(1.0 / std::sqrt(2.0), 0.0), Complex(1.0 / std::sqrt(2.0), 0.0);
  for (int j = 0; j < f; ++j) {
    sys.states.block(0, j, 2, 1) = u / std::sqrt(double(f));
    sys.states.block(2, j, 2, 1) = v / std::sqrt(double(f));
  }
  return sys;
}

}  // namespace

std::vector<Estimate> mc_moments(int f, const std::vector<MomentSpec>& specs, long samples, std::uint64_t seed) {
  require(samples >= 1000, Errc::InvalidArgument, "at least 1000 samples required");
  for (const auto& s : specs) {
    if (auto p = std::get_if<EntryProduct>(&s))
      for (auto [i, j] : p->entries)
        require(i >= 0 && i < f && j >= 0 && j < f, Errc::IndexOutOfRange, "matrix entry out of range");
    if (auto a = std::get_if<AbsSquare>(&s))
      require(a->row >= 0 && a->row < f && a->col >= 0 && a->col < f, Errc::IndexOutOfRange, "matrix entry out of range");
  }
  std::vector<Accumulator> acc(specs.size());
  MixedSystem pair = in_phase_pair(f);
  double coherent = 0.0;
  bool need_kernel = std::any_of(specs.begin(), specs.end(), [](const MomentSpec& s) { return std::holds_alternative<KernelRatio>(s); });
  if (need_kernel) coherent = cross_kernel(pair, 1, 0).norm();
  for (long i = 0; i < samples; ++i) {
    Rng rng = stream(seed, static_cast<std::uint64_t>(i));
    CMatrix u = haar_sample(f, rng);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      Complex z;
      if (auto p = std::get_if<EntryProduct>(&specs[s])) {
        z = 1.0;
        for (auto [r, c] : p->entries) z *= u(r, c);
      } else if (auto a = std::get_if<AbsSquare>(&specs[s])) {
        z = std::norm(u(a->row, a->col));
      } else {
        pair.decoherence = {CMatrix::Identity(f, f), u};
        z = cross_kernel(pair, 1, 0).norm() / coherent;
      }
      acc[s].add(z);
    }
  }
  std::vector<Estimate> out;
  for (const auto& a : acc) out.push_back(a.estimate());
  return out;
}

Estimate mc_moments(int f, const MomentSpec& spec, long samples, std::uint64_t seed) {
  return mc_moments(f, std::vector<MomentSpec>{spec}, samples, seed).front();
}

Complex det_coefficient(const CMatrix& u, int n, const std::vector<int>& i1) {
  const int f = static_cast<int>(u.rows());
  require(n >= 0 && n <= f, Errc::InvalidArgument, "n must satisfy 0 <= n <= f");
  std::vector<char> in1(f, 0);
  for (int i : i1) {
    require(i >= 0 && i < n, Errc::IndexOutOfRange, "I1 must be a subset of the first n labels");
    in1[i] = 1;
  }
  CMatrix m = u;
  for (int k = 0; k < f; ++k) {
    bool x2 = k >= n || !in1[k];
    bool x1 = k >= n || in1[k];
    if (!x2) m.col(k).setZero();
    if (x1) m(k, k) += 1.0;
  }
  return double(multi_index_sign(i1)) * det(m);
}

namespace {

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double log_weight(const CMatrix& u, const MeasureSpec& m) {
  const int f = static_cast<int>(u.rows());
  double a = 0.0;
  if (m.kind == MeasureKind::TraceWeighted) a = std::abs(Complex(f) + u.trace());
  else if (m.kind == MeasureKind::DetWeighted) a = std::abs(det(CMatrix(CMatrix::Identity(f, f) + u)));
  else return 0.0;
  if (a == 0.0) return m.alpha > 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  return m.alpha * std::log(a);
}

CMatrix reunitarize(const CMatrix& u) {
  Eigen::HouseholderQR<CMatrix> qr(u);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < q.cols(); ++j) {
    Complex d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q * std::polar(1.0, -std::arg(det(q)) / static_cast<double>(q.cols()));
}

CMatrix random_step(int f, double delta, Rng& rng) {
  CMatrix h = random_hermitian(f, rng);
  h -= (h.trace() / double(f)) * CMatrix::Identity(f, f);
  h /= std::sqrt(double(f));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector ph(f);
  for (int k = 0; k < f; ++k) ph(k) = std::polar(1.0, delta * es.eigenvalues()(k));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

Estimate batch_estimate(const std::vector<Complex>& xs, int batches) {
  Estimate e;
  e.samples = static_cast<long>(xs.size());
  if (xs.empty()) return e;
  Complex m = std::accumulate(xs.begin(), xs.end(), Complex(0.0)) / double(xs.size());
  e.mean = m;
  const std::size_t bs = xs.size() / batches;
  if (bs == 0) return e;
  double vr = 0, vi = 0;
  for (int b = 0; b < batches; ++b) {
    Complex bm = 0.0;
    for (std::size_t k = 0; k < bs; ++k) bm += xs[b * bs + k];
    bm /= double(bs);
    vr += (bm.real() - m.real()) * (bm.real() - m.real());
    vi += (bm.imag() - m.imag()) * (bm.imag() - m.imag());
  }
  e.se_real = std::sqrt(vr / (batches - 1) / batches);
  e.se_imag = std::sqrt(vi / (batches - 1) / batches);
  return e;
}

}  // namespace

DetMoments det_moments(int f, int n, const std::vector<int>& i1, const MeasureSpec& measure, long samples,
                       std::uint64_t seed, const std::vector<std::vector<int>>& second_partners,
                       const MetropolisOptions& mopts) {
  require(f >= 2, Errc::InvalidArgument, "f must be at least 2");
  require(samples >= 1000, Errc::InvalidArgument, "at least 1000 samples required");
  require(std::isfinite(measure.alpha), Errc::InvalidArgument, "alpha must be finite");
  std::vector<int> base = sorted_unique(i1);
  std::vector<std::vector<int>> partners;
  for (const auto& p : second_partners) partners.push_back(sorted_unique(p));

  std::vector<Complex> c1;
  std::vector<std::vector<Complex>> c2(partners.size());
  c1.reserve(samples);
  auto record = [&](const CMatrix& u) {
    Complex c = det_coefficient(u, n, base);
    c1.push_back(c);
    for (std::size_t k = 0; k < partners.size(); ++k) c2[k].push_back(std::conj(c) * det_coefficient(u, n, partners[k]));
  };

  DetMoments out;
  if (measure.kind == MeasureKind::Haar) {
    for (long i = 0; i < samples; ++i) {
      Rng rng = stream(seed, static_cast<std::uint64_t>(i));
      record(haar_sample(f, rng));
    }
    Accumulator a;
    for (auto z : c1) a.add(z);
    out.first = a.estimate();
    for (auto& v : c2) {
      Accumulator b;
      for (auto z : v) b.add(z);
      out.second.push_back(b.estimate());
    }
    return out;
  }

  // Metropolis chain in SU(f) with right-multiplied random steps.
  Rng rng = stream(seed, 0);
  CMatrix u = haar_sample(f, rng);
  double lw = log_weight(u, measure);
  for (int tries = 0; !std::isfinite(lw) && tries < 100; ++tries) {
    u = haar_sample(f, rng);
    lw = log_weight(u, measure);
  }
  require(std::isfinite(lw), Errc::ChainNotConverged, "no starting point with finite weight");
  constexpr double kMaxDelta = 10.0;
  double delta = 0.5;
  long accepted = 0, proposed = 0, window_acc = 0, window = 0;
  auto step = [&]() {
    CMatrix cand = u * random_step(f, delta, rng);
    double lc = log_weight(cand, measure);
    ++proposed;
    ++window;
    if (std::isfinite(lc) && std::log(uniform01(rng)) < lc - lw) {
      u = cand;
      lw = lc;
      ++accepted;
      ++window_acc;
    }
    if (proposed % 100 == 0) {
      u = reunitarize(u);
      lw = log_weight(u, measure);
    }
  };
  for (int b = 0; b < mopts.burn_in; ++b) {
    step();
    if (window == 50) {
      double rate = double(window_acc) / window;
      delta *= rate > mopts.target_acceptance ? 1.25 : 0.8;
      delta = std::clamp(delta, 1e-4, kMaxDelta);
      window = window_acc = 0;
    }
  }
  accepted = proposed = 0;
  for (long i = 0; i < samples; ++i) {
    for (int t = 0; t < mopts.thinning; ++t) step();
    record(u);
  }
  out.acceptance = double(accepted) / double(proposed);
  const int batches = 20;
  out.first = batch_estimate(c1, batches);
  for (auto& v : c2) out.second.push_back(batch_estimate(v, batches));

  // Diagnostics: acceptance band and agreement of the two chain halves.
  // High acceptance is only suspicious while the step size can still grow.
  bool ok = out.acceptance > 0.05 && (out.acceptance < 0.95 || delta >= kMaxDelta);
  std::size_t half = c1.size() / 2;
  Estimate h1 = batch_estimate(std::vector<Complex>(c1.begin(), c1.begin() + half), batches / 2);
  Estimate h2 = batch_estimate(std::vector<Complex>(c1.begin() + half, c1.end()), batches / 2);
  double sr = std::hypot(h1.se_real, h2.se_real), si = std::hypot(h1.se_imag, h2.se_imag);
  double dr = std::abs(h1.mean.real() - h2.mean.real()), di = std::abs(h1.mean.imag() - h2.mean.imag());
  double scale = 1e-12 * (1.0 + std::abs(out.first.mean));
  ok = ok && dr <= 5.0 * sr + scale && di <= 5.0 * si + scale;
  require(ok, Errc::ChainNotConverged, "Metropolis diagnostics failed");
  return out;
}

MeasurementGram MeasurementGram::identity(int dim) {
  MeasurementGram g;
  g.form.resize(dim, dim);
  g.form.setIdentity();
  return g;
}

MeasurementGram MeasurementGram::from_dense(const CMatrix& m) {
  require(m.rows() == m.cols(), Errc::DimensionMismatch, "Gram must be square");
  require(is_hermitian(m, 1e-12), Errc::InvalidArgument, "Gram must be Hermitian");
  MeasurementGram g;
  g.form = m.sparseView();
  require(g.min_eigenvalue() >= -1e-10, Errc::InvalidArgument, "Gram must be positive semi-definite");
  return g;
}

MeasurementGram MeasurementGram::shifted(int sites, int components, int shift) {
  require(sites > 0 && components > 0, Errc::InvalidArgument, "empty grid");
  const int n = sites * components;
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(3 * n);
  for (int x = 0; x < sites; ++x)
    for (int c = 0; c < components; ++c) {
      int i = x * components + c;
      t.emplace_back(i, i, 1.0);
      // (S psi)(x) = psi(x + shift); G = 1 + (S + S^*)/2
      int xp = ((x + shift) % sites + sites) % sites;
      int xm = ((x - shift) % sites + sites) % sites;
      t.emplace_back(i, xp * components + c, 0.5);
      t.emplace_back(i, xm * components + c, 0.5);
    }
  MeasurementGram g;
  g.form.resize(n, n);
  g.form.setFromTriplets(t.begin(), t.end());
  return g;
}

double MeasurementGram::min_eigenvalue() const {
  require(dim() <= 4096, Errc::CapExceeded, "dense eigenvalue check limited to 4096 dimensions");
  if (dim() == 0) return 0.0;
  CMatrix d = CMatrix(form);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Complex induced_form(const WedgeSum& a, const WedgeSum& b, const MeasurementGram& g) {
  require(a.sector == b.sector, Errc::SectorMismatch, "induced form between different sectors");
  require(a.dim == b.dim && a.dim == g.dim(), Errc::DimensionMismatch, "wedges and Gram over different spaces");
  Complex s = 0.0;
  for (const auto& tb : b.terms) {
    CMatrix gw = g.form * tb.factors;
    for (const auto& ta : a.terms) s += std::conj(ta.coef) * tb.coef * det(CMatrix(ta.factors.adjoint() * gw));
  }
  return s;
}

CMatrix family_gram(const std::vector<WedgeSum>& family, const MeasurementGram& g) {
  const int l = static_cast<int>(family.size());
  CMatrix m(l, l);
  for (int a = 0; a < l; ++a)
    for (int b = a; b < l; ++b) {
      m(a, b) = induced_form(family[a], family[b], g);
      m(b, a) = std::conj(m(a, b));
    }
  return m;
}

CVector EffectiveFockSpace::project(const CVector& c) const {
  require(c.size() == gram.rows(), Errc::DimensionMismatch, "coefficient vector has wrong length");
  return eigenvalues.cwiseSqrt().asDiagonal() * (basis.adjoint() * c);
}

CVector EffectiveFockSpace::include(const CVector& q) const {
  require(q.size() == dim(), Errc::DimensionMismatch, "coordinate vector has wrong length");
  return basis * (eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * q);
}

CMatrix EffectiveFockSpace::effective_operator(const CMatrix& m) const {
  RVector is = eigenvalues.cwiseSqrt().cwiseInverse();
  return is.asDiagonal() * (basis.adjoint() * m * basis) * is.asDiagonal();
}

EffectiveFockSpace effective_space(const CMatrix& family_gram, double rel_cutoff) {
  require(family_gram.rows() == family_gram.cols(), Errc::DimensionMismatch, "family Gram must be square");
  EffectiveFockSpace e;
  e.gram = family_gram;
  CMatrix h = 0.5 * (family_gram + family_gram.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector& ev = es.eigenvalues();
  double top = ev.size() ? ev(ev.size() - 1) : 0.0;
  require(top > 0.0, Errc::AllNull, "family Gram has no positive eigenvalue");
  e.cutoff = rel_cutoff * top;
  std::vector<int> keep;
  for (int k = static_cast<int>(ev.size()) - 1; k >= 0; --k)
    if (ev(k) >= e.cutoff) keep.push_back(k);
  e.eigenvalues.resize(keep.size());
  e.basis.resize(h.rows(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    e.eigenvalues(i) = ev(keep[i]);
    e.basis.col(i) = es.eigenvectors().col(keep[i]);
  }
  return e;
}

EffectiveFockSpace effective_space(const std::vector<WedgeSum>& family, const MeasurementGram& g, double rel_cutoff) {
  return effective_space(family_gram(family, g), rel_cutoff);
}

FockObservable FockObservable::identity() { return FockObservable{}; }

FockObservable FockObservable::lifted(SparseOp o) {
  FockObservable f;
  f.kind_ = 1;
  f.o1_ = std::move(o);
  return f;
}

FockObservable FockObservable::wick(SparseOp o1, SparseOp o2) {
  FockObservable f;
  f.kind_ = 2;
  f.o1_ = std::move(o1);
  f.o2_ = std::move(o2);
  return f;
}

WedgeSum FockObservable::apply(const WedgeSum& w) const {
  if (kind_ == 0) return w;
  WedgeSum out;
  out.dim = w.dim;
  out.sector = w.sector;
  const int n = w.sector;
  for (const auto& t : w.terms) {
    if (kind_ == 1) {
      require(o1_.rows() == w.dim, Errc::DimensionMismatch, "observable over a different space");
      for (int k = 0; k < n; ++k) {
        CVector col = o1_ * t.factors.col(k);
        if (col.squaredNorm() == 0.0) continue;
        Wedge nt{t.coef, t.factors};
        nt.factors.col(k) = col;
        out.terms.push_back(std::move(nt));
      }
    } else {
      require(o1_.rows() == w.dim && o2_.rows() == w.dim, Errc::DimensionMismatch, "observable over a different space");
      for (int k = 0; k < n; ++k) {
        CVector c1 = o1_ * t.factors.col(k);
        if (c1.squaredNorm() == 0.0) continue;
        for (int l = 0; l < n; ++l) {
          if (l == k) continue;
          CVector c2 = o2_ * t.factors.col(l);
          if (c2.squaredNorm() == 0.0) continue;
          Wedge nt{t.coef, t.factors};
          nt.factors.col(k) = c1;
          nt.factors.col(l) = c2;
          out.terms.push_back(std::move(nt));
        }
      }
    }
  }
  return out;
}

RuleB expectation_rule_B(const std::vector<WedgeSum>& family, const FockObservable& o, const MeasurementGram& g,
                         const std::vector<RVector>& regions) {
  const int l = static_cast<int>(family.size());
  require(l > 0, Errc::InvalidArgument, "empty family");
  require(regions.empty() || static_cast<int>(regions.size()) == l, Errc::DimensionMismatch,
          "one region indicator per family member");
  RuleB r;
  r.numerators.resize(l, l);
  r.denominators.resize(l, l);
  std::vector<WedgeSum> applied;
  for (int b = 0; b < l; ++b) {
    applied.push_back(o.apply(family[b]));
    if (!regions.empty()) {
      for (const auto& t : applied.back().terms) {
        CMatrix outside = (RVector::Ones(regions[b].size()) - regions[b]).asDiagonal() * t.factors;
        double tot = t.factors.norm();
        if (tot > 0) r.region_leak = std::max(r.region_leak, outside.norm() / tot);
      }
    }
  }
  Complex num = 0.0, den = 0.0, adj = 0.0;
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b) {
      r.numerators(a, b) = induced_form(family[a], applied[b], g);
      r.denominators(a, b) = induced_form(family[a], family[b], g);
      num += r.numerators(a, b);
      den += r.denominators(a, b);
      adj += induced_form(applied[a], family[b], g);
    }
  require(std::abs(den) >= 1e-12, Errc::NullDenominator, "normalization sum vanishes");
  require(r.region_leak <= 1e-12, Errc::InvalidArgument, "observable does not preserve the region Fock spaces");
  r.value = num / den;
  r.symmetry_defect = std::abs(num - adj) / std::abs(den);
  return r;
}

namespace {

struct Eigenspaces {
  std::vector<double> values;
  std::vector<CMatrix> bases;
};

Eigenspaces eigenspaces(const CMatrix& o_eff) {
  require(o_eff.rows() == o_eff.cols(), Errc::DimensionMismatch, "operator must be square");
  double scale = std::max(1.0, o_eff.cwiseAbs().maxCoeff());
  require(hermitian_defect(o_eff) <= 1e-8 * scale, Errc::InvalidArgument, "effective operator is not self-adjoint");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (o_eff + o_eff.adjoint()));
  Eigenspaces out;
  const double tol = 1e-9 * scale;
  int start = 0;
  const int n = static_cast<int>(o_eff.rows());
  for (int k = 1; k <= n; ++k) {
    if (k == n || es.eigenvalues()(k) - es.eigenvalues()(k - 1) > tol) {
      out.values.push_back(es.eigenvalues().segment(start, k - start).mean());
      out.bases.push_back(es.eigenvectors().middleCols(start, k - start));
      start = k;
    }
  }
  return out;
}

}  // namespace

int eigenspace_count(const CMatrix& o_eff) { return static_cast<int>(eigenspaces(o_eff).values.size()); }

Collapse collapse_rule_D(const CVector& psi, const CMatrix& o_eff, std::optional<int> index, Rng* rng) {
  require(psi.size() == o_eff.rows(), Errc::DimensionMismatch, "state and operator sizes differ");
  double n2 = psi.squaredNorm();
  require(n2 > 0.0, Errc::ZeroProjection, "zero state");
  Eigenspaces es = eigenspaces(o_eff);
  std::vector<double> prob;
  for (const auto& b : es.bases) prob.push_back((b.adjoint() * psi).squaredNorm() / n2);
  int k;
  if (index) {
    require(*index >= 0 && *index < static_cast<int>(es.values.size()), Errc::IndexOutOfRange, "no such eigenspace");
    k = *index;
  } else {
    require(rng != nullptr, Errc::InvalidArgument, "Born sampling needs a random stream");
    double u = uniform01(*rng), c = 0.0;
    k = static_cast<int>(prob.size()) - 1;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      c += prob[i];
      if (u < c) { k = static_cast<int>(i); break; }
    }
  }
  require(prob[k] > 1e-24, Errc::ZeroProjection, "selected eigenspace component vanishes");
  Collapse out;
  CVector p = es.bases[k] * (es.bases[k].adjoint() * psi);
  out.state = p * std::sqrt(n2 / p.squaredNorm());
  out.eigenvalue = es.values[k];
  out.probability = prob[k];
  out.eigenspace = k;
  return out;
}

RVector bump(int grid, int center, int width) {
  require(grid > 0 && width >= 6, Errc::InvalidArgument, "bump needs a width of at least 6 cells");
  const double sigma = width / 6.0;
  const int half = width / 2;
  RVector g = RVector::Zero(grid);
  for (int d = -half; d <= half; ++d) {
    int x = ((center + d) % grid + grid) % grid;
    g(x) = std::exp(-0.5 * d * d / (sigma * sigma));
  }
  return g / g.norm();
}

namespace {

int ceil_div(int x, int e) { return x >= 0 ? (x + e - 1) / e : -((-x) / e); }

// Average over one full period of 2 eps sites, per component.
CVector period_average(const CVector& v, int sites, int comps, int eps) {
  CVector out = CVector::Zero(v.size());
  const int w = 2 * eps;
  for (int c = 0; c < comps; ++c) {
    Complex run = 0.0;
    for (int k = -eps; k < eps; ++k) run += v(((k % sites + sites) % sites) * comps + c);
    for (int x = 0; x < sites; ++x) {
      out(x * comps + c) = run / double(w);
      int drop = ((x - eps) % sites + sites) % sites;
      int add = ((x + eps) % sites + sites) % sites;
      run += v(add * comps + c) - v(drop * comps + c);
    }
  }
  return out;
}

// Two successive period averages (triangular kernel of width 4 eps). A single
// box leaves a first-order term g'(x) c(x) with c of period 2 eps. The factor 2
// restores the weight of a function living on every other layer.
CVector homogenize(const CVector& v, int sites, int comps, int eps) {
  return 2.0 * period_average(period_average(v, sites, comps, eps), sites, comps, eps);
}

SparseOp spin_projector(int sites, int begin, int end, int spin) {
  SparseOp s(2 * sites, 2 * sites);
  std::vector<Eigen::Triplet<Complex>> t;
  for (int x = begin; x < end; ++x) t.emplace_back(2 * x + spin, 2 * x + spin, 1.0);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

}  // namespace

SingletReport singlet_experiment(const SingletConfig& cfg, std::uint64_t seed) {
  const int n = cfg.grid, eps = cfg.epsilon, w = cfg.bump_width;
  require(n > 0 && eps > 0 && n % (2 * eps) == 0, Errc::InvalidArgument, "grid must be a multiple of 2 epsilon");
  int ca = cfg.alice_center >= 0 ? cfg.alice_center : n / 4;
  int cb = cfg.bob_center >= 0 ? cfg.bob_center : 3 * n / 4;
  const int half = w / 2;
  // Alice lives in [0, n/2), Bob in [n/2, n).
  bool alice_ok = ca - half >= 0 && ca + half < n / 2;
  bool bob_ok = cb - half >= n / 2 && cb + half < n;
  require(alice_ok && bob_ok, Errc::OverlappingSupports, "bumps must be disjoint and inside their halves");

  RVector ga = bump(n, ca, w), gb = bump(n, cb, w);
  const int dim = 2 * n;
  auto spinor = [&](const RVector& g, int spin) {
    CVector v = CVector::Zero(dim);
    for (int x = 0; x < n; ++x) v(2 * x + spin) = g(x);
    return v;
  };
  CVector ua = spinor(ga, 0), da = spinor(ga, 1), ub = spinor(gb, 0), db = spinor(gb, 1);

  std::vector<int> labels(n);
  for (int x = 0; x < n; ++x) labels[x] = (ceil_div(x, eps) % 2 == 0) ? 0 : 1;
  CVector chi1 = CVector::Zero(dim), chi2 = CVector::Zero(dim);
  for (int x = 0; x < n; ++x)
    for (int s = 0; s < 2; ++s) (labels[x] == 0 ? chi1 : chi2)(2 * x + s) = 1.0;

  MixedSystem sys;
  sys.components = 2;
  sys.partition = RegionPartition::from_labels(labels);
  sys.states.resize(dim, 2);
  sys.states.col(0) = ua.cwiseProduct(chi1) + da.cwiseProduct(chi2);
  sys.states.col(1) = db.cwiseProduct(chi1) - ub.cwiseProduct(chi2);
  auto family = subsystem_wedges(sys);

  std::vector<RVector> regions(2, RVector::Zero(dim));
  for (int i = 0; i < dim; ++i) {
    regions[0](i) = chi1(i).real();
    regions[1](i) = chi2(i).real();
  }
  MeasurementGram g = MeasurementGram::shifted(n, 2, eps);
  SparseOp s_ua = spin_projector(n, 0, n / 2, 0);
  SparseOp s_db = spin_projector(n, n / 2, n, 1);

  SingletReport rep;
  rep.epsilon = eps;
  rep.names = {"S_up_A", "S_down_B", "wick_S_up_A_S_down_B", "wick_S_up_A_S_up_A", "wick_S_down_B_S_down_B"};
  rep.targets = {0.5, 0.5, 0.5, 0.0, 0.0};
  std::vector<FockObservable> obs = {FockObservable::lifted(s_ua), FockObservable::lifted(s_db),
                                     FockObservable::wick(s_ua, s_db), FockObservable::wick(s_ua, s_ua),
                                     FockObservable::wick(s_db, s_db)};
  for (std::size_t k = 0; k < obs.size(); ++k) {
    RuleB r = expectation_rule_B(family, obs[k], g, regions);
    rep.values.push_back(r.value.real());
    rep.errors.push_back(std::abs(r.value.real() - rep.targets[k]));
    rep.max_error = std::max(rep.max_error, rep.errors.back());
    rep.symmetry_defect = std::max(rep.symmetry_defect, r.symmetry_defect);
    rep.imaginary_residue = std::max(rep.imaginary_residue, std::abs(r.value.imag()));
  }

  EffectiveFockSpace eff = effective_space(family, g);
  rep.effective_dim = eff.dim();
  rep.effective_state = eff.project(CVector::Ones(static_cast<int>(family.size())));

  // Smooth extension of each region wedge, compared with the ideal singlet.
  WedgeSum smooth;
  smooth.dim = dim;
  smooth.sector = 2;
  for (const auto& m : family)
    for (const auto& t : m.terms) {
      CMatrix f(dim, 2);
      for (int k = 0; k < 2; ++k) f.col(k) = homogenize(t.factors.col(k), n, 2, eps);
      smooth.terms.push_back({t.coef, f});
    }
  WedgeSum ideal;
  ideal.dim = dim;
  ideal.sector = 2;
  CMatrix f1(dim, 2), f2(dim, 2);
  f1 << ua, db;
  f2 << da, ub;
  ideal.terms = {{1.0, f1}, {-1.0, f2}};
  MeasurementGram id = MeasurementGram::identity(dim);
  double ov = std::norm(induced_form(ideal, smooth, id));
  rep.fidelity = ov / (induced_form(ideal, ideal, id).real() * induced_form(smooth, smooth, id).real());

  // Rule D: measure Alice's spin on the effective state.
  CMatrix num(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) num(a, b) = induced_form(family[a], obs[0].apply(family[b]), g);
  Rng rng = stream(seed, 0);
  rep.collapse_eigenvalue = collapse_rule_D(rep.effective_state, eff.effective_operator(num), std::nullopt, &rng).eigenvalue;
  return rep;
}

Complex superposition_extraction(const CMatrix& u, const TermSelector& term, int n) {
  const int f = static_cast<int>(u.rows());
  require(u.cols() == f && n >= 0 && n <= f, Errc::InvalidArgument, "bad superposition setup");
  require(term.region2_slots.size() == term.region2_labels.size(), Errc::DimensionMismatch,
          "slots and labels must have equal size");
  const int basis = f + n;  // region-1 labels 0..f-1, region-2 particle labels f..f+n-1
  require(basis <= fock::kMaxDim, Errc::CapExceeded, "abstract space exceeds 24 modes");
  auto label2 = [&](int k) { return k < n ? f + k : k; };

  std::vector<char> in_s2(f, 0);
  for (int s : term.region2_slots) {
    require(s >= 0 && s < f, Errc::IndexOutOfRange, "slot out of range");
    in_s2[s] = 1;
  }
  CMatrix frame = CMatrix::Zero(basis, f);
  for (int j = 0; j < f; ++j) {
    if (!in_s2[j]) frame(j, j) = 1.0;
    else for (int k = 0; k < f; ++k) frame(label2(k), j) += u(j, k);
  }
  std::vector<int> seq;
  for (int j = 0; j < f; ++j) if (!in_s2[j]) seq.push_back(j);
  for (int k : term.region2_labels) {
    require(k >= 0 && k < f, Errc::IndexOutOfRange, "label out of range");
    seq.push_back(label2(k));
  }
  std::vector<int> sorted = seq;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return 0.0;
  int inv = 0;
  for (std::size_t a = 0; a < seq.size(); ++a)
    for (std::size_t b = a + 1; b < seq.size(); ++b) inv += seq[a] > seq[b];
  return (inv % 2 ? -1.0 : 1.0) * det(CMatrix(frame(sorted, Eigen::all)));
}

Estimate mixed_term_mean(int f, const TermSelector& term, int n, long samples, std::uint64_t seed) {
  Accumulator a;
  for (long i = 0; i < samples; ++i) {
    Rng rng = stream(seed, static_cast<std::uint64_t>(i));
    a.add(superposition_extraction(haar_sample(f, rng), term, n));
  }
  return a.estimate();
}

Complex identified_coefficient(const CMatrix& u, int n, const std::vector<int>& i1) {
  const int f = static_cast<int>(u.rows());
  require(n >= 0 && n <= f, Errc::InvalidArgument, "n must satisfy 0 <= n <= f");
  const int basis = f + n;
  require(basis <= fock::kMaxDim, Errc::CapExceeded, "abstract space exceeds 24 modes");
  auto label2 = [&](int k) { return k < n ? f + k : k; };
  CMatrix frame = CMatrix::Zero(basis, f);
  for (int j = 0; j < f; ++j) {
    frame(j, j) += 1.0;
    for (int k = 0; k < f; ++k) frame(label2(k), j) += u(j, k);
  }
  std::vector<int> a = sorted_unique(i1);
  std::vector<int> seq(a.begin(), a.end());
  for (int k : complement(a, n)) seq.push_back(label2(k));
  for (int k = n; k < f; ++k) seq.push_back(k);
  std::vector<int> sorted = seq;
  std::sort(sorted.begin(), sorted.end());
  int inv = 0;
  for (std::size_t p = 0; p < seq.size(); ++p)
    for (std::size_t q = p + 1; q < seq.size(); ++q) inv += seq[p] > seq[q];
  return (inv % 2 ? -1.0 : 1.0) * det(CMatrix(frame(sorted, Eigen::all)));
}

CMatrix local_mixing_kernel(const CMatrix& states, int components, const std::vector<CMatrix>& u_sites, int x, int y) {
  const int sites = static_cast<int>(u_sites.size());
  require(states.rows() == static_cast<Eigen::Index>(sites) * components, Errc::DimensionMismatch,
          "one unitary per site required");
  require(x >= 0 && x < sites && y >= 0 && y < sites, Errc::IndexOutOfRange, "site out of range");
  for (int s : {x, y}) require(is_special_unitary(u_sites[s]), Errc::NotSpecialUnitary, "U(x) must lie in SU(f)");
  CMatrix m = u_sites[x] * u_sites[y].adjoint();
  return -states.middleRows(x * components, components) * m * states.middleRows(y * components, components).adjoint();
}

CoherenceResult coherence_classify(const CMatrix& states, int components, const std::vector<CMatrix>& u_sites, int x,
                                   int y, double threshold) {
  CMatrix mixed = local_mixing_kernel(states, components, u_sites, x, y);
  CMatrix plain = -states.middleRows(x * components, components) * states.middleRows(y * components, components).adjoint();
  double pn = plain.norm();
  require(pn > 0.0, Errc::InvalidArgument, "unmixed kernel vanishes at this pair");
  CoherenceResult r;
  r.ratio = mixed.norm() / pn;
  r.relation = r.ratio >= threshold ? Coherence::Coherent : Coherence::Decoherent;
  return r;
}

HolographicScenario holographic_scenario(int f, std::uint64_t seed) {
  require(f >= 6, Errc::InvalidArgument, "need at least six states");
  HolographicScenario s;
  const int c = s.components;
  s.states = CMatrix::Zero(3 * c, f);
  Rng rng = stream(seed, 0);
  CVector ux = complex_gaussian(c, 1, rng).col(0).normalized();
  CVector uy = complex_gaussian(c, 1, rng).col(0).normalized();
  CVector uz = complex_gaussian(c, 1, rng).col(0).normalized();
  // Groups: G1 lives at (x,y), G2 at (y,z), G3 at (x,z).
  const int g = f / 3;
  std::vector<int> group(f);
  for (int j = 0; j < f; ++j) group[j] = j < g ? 0 : (j < 2 * g ? 1 : 2);
  for (int j = 0; j < f; ++j) {
    if (group[j] != 1) s.states.block(0, j, c, 1) = ux;
    if (group[j] != 2) s.states.block(c, j, c, 1) = uy;
    if (group[j] != 0) s.states.block(2 * c, j, c, 1) = uz;
  }
  // Phases on G3 only, summing to zero so the matrix lies in SU(f).
  std::vector<double> phi;
  for (int j = 2 * g; j < f; ++j) phi.push_back(2.0 * M_PI * uniform01(rng));
  double mean = std::accumulate(phi.begin(), phi.end(), 0.0) / phi.size();
  CMatrix d = CMatrix::Identity(f, f);
  for (std::size_t k = 0; k < phi.size(); ++k) d(2 * g + k, 2 * g + k) = std::polar(1.0, phi[k] - mean);
  s.u_sites = {CMatrix::Identity(f, f), d, d};
  return s;
}

}  // namespace fpl::mixing
