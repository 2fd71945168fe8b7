#include "fpl/core_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>

#include "fpl/linalg.hpp"

namespace fpl::core {

IndefiniteSpace::IndefiniteSpace(CMatrix gram) : gram_(std::move(gram)) {
  require(gram_.rows() == gram_.cols(), Errc::DimensionMismatch, "Gram matrix must be square");
  double scale = std::max(1.0, gram_.cwiseAbs().maxCoeff());
  require(is_hermitian(gram_, 1e-12 * scale), Errc::InvalidArgument, "Gram matrix must be Hermitian");
  if (gram_.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram_, Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  double tiny = 1e-12 * ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < ev.size(); ++i) {
    require(std::abs(ev(i)) > tiny, Errc::InvalidArgument, "Gram matrix is degenerate");
    if (ev(i) > 0) ++p_; else ++q_;
  }
}

CMatrix IndefiniteSpace::adjoint(const CMatrix& a) const {
  return gram_.partialPivLu().solve(a.adjoint() * gram_);
}

DiscreteSpacetime DiscreteSpacetime::standard(int m) {
  require(m >= 1, Errc::InvalidArgument, "need at least one spacetime point");
  int n = 4 * m;
  CMatrix s = CMatrix::Zero(n, n);
  DiscreteSpacetime st;
  for (int x = 0; x < m; ++x) {
    s(4 * x, 4 * x) = 1.0;
    s(4 * x + 1, 4 * x + 1) = 1.0;
    s(4 * x + 2, 4 * x + 2) = -1.0;
    s(4 * x + 3, 4 * x + 3) = -1.0;
    CMatrix e = CMatrix::Zero(n, n);
    e.block(4 * x, 4 * x, 4, 4).setIdentity();
    st.projectors.push_back(e);
    CMatrix b = CMatrix::Zero(n, 4);
    b.block(4 * x, 0, 4, 4).setIdentity();
    st.bases.push_back(b);
  }
  st.space = IndefiniteSpace(s);
  return st;
}

DiscreteSpacetime DiscreteSpacetime::from_projectors(IndefiniteSpace space, std::vector<CMatrix> projectors) {
  const int n = space.dim();
  require(!projectors.empty(), Errc::InvalidArgument, "no spacetime points");
  CMatrix sum = CMatrix::Zero(n, n);
  DiscreteSpacetime st;
  for (std::size_t x = 0; x < projectors.size(); ++x) {
    const CMatrix& e = projectors[x];
    require(e.rows() == n && e.cols() == n, Errc::DimensionMismatch, "projector size");
    require((e * e - e).cwiseAbs().maxCoeff() < 1e-10, Errc::InvalidArgument, "E_x is not idempotent");
    require((space.gram() * e - e.adjoint() * space.gram()).cwiseAbs().maxCoeff() < 1e-10,
            Errc::InvalidArgument, "E_x is not self-adjoint");
    for (std::size_t y = 0; y < x; ++y)
      require((e * projectors[y]).cwiseAbs().maxCoeff() < 1e-10, Errc::InvalidArgument,
              "spacetime projectors are not mutually orthogonal");
    Eigen::ColPivHouseholderQR<CMatrix> qr(e);
    qr.setThreshold(1e-10);
    require(qr.rank() == 4, Errc::InvalidArgument, "spin space must be 4-dimensional");
    CMatrix q = qr.householderQ();
    CMatrix b = q.leftCols(4);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b.adjoint() * space.gram() * b, Eigen::EigenvaluesOnly);
    int pos = 0;
    for (int i = 0; i < 4; ++i) pos += es.eigenvalues()(i) > 0;
    require(pos == 2, Errc::InvalidArgument, "spin space must have signature (2,2)");
    sum += e;
    st.bases.push_back(b);
  }
  require((sum - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10, Errc::InvalidArgument,
          "spacetime projectors do not sum to the identity");
  st.space = std::move(space);
  st.projectors = std::move(projectors);
  return st;
}

FermionicProjector frame_to_projector(const IndefiniteSpace& space, const CMatrix& vectors) {
  const int n = space.dim();
  const int f = static_cast<int>(vectors.cols());
  require(vectors.rows() == n, Errc::DimensionMismatch, "frame vectors have wrong length");
  FermionicProjector out;
  out.matrix = CMatrix::Zero(n, n);
  out.frame = CMatrix(n, f);
  if (f == 0) return out;

  CMatrix v = vectors;
  for (int j = 0; j < f; ++j) {
    double nrm = v.col(j).norm();
    require(nrm > 0.0, Errc::RankDeficient, "zero frame vector");
    v.col(j) /= nrm;
  }
  Eigen::ColPivHouseholderQR<CMatrix> qr(v);
  qr.setThreshold(1e-10);
  require(qr.rank() == f, Errc::RankDeficient, "frame vectors are linearly dependent");

  CMatrix g = -space.gram_of(v);
  g = 0.5 * (g + g.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
  require(es.eigenvalues()(0) > 1e-10, Errc::NotNegativeDefinite, "span of the frame is not negative definite");

  // Modified Gram-Schmidt against -<.|.>, with one re-orthogonalization pass.
  const CMatrix& s = space.gram();
  for (int j = 0; j < f; ++j) {
    CVector w = v.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) {
        Complex c = -out.frame.col(i).dot(s * w);
        w -= c * out.frame.col(i);
      }
    double nrm2 = -(w.dot(s * w)).real();
    require(nrm2 > 1e-14, Errc::NotNegativeDefinite, "frame lost negativity during orthonormalization");
    out.frame.col(j) = w / std::sqrt(nrm2);
  }
  out.matrix = -out.frame * (out.frame.adjoint() * s);
  return out;
}

CMatrix discrete_kernel(const CMatrix& p, const DiscreteSpacetime& st, int x, int y) {
  require(x >= 0 && x < st.points() && y >= 0 && y < st.points(), Errc::IndexOutOfRange,
          "spacetime point out of range");
  require(p.rows() == st.dim() && p.cols() == st.dim(), Errc::DimensionMismatch, "projector size");
  return st.bases[x].adjoint() * (st.projectors[x] * (p * st.bases[y]));
}

CMatrix discrete_kernel(const FermionicProjector& p, const DiscreteSpacetime& st, int x, int y) {
  return discrete_kernel(p.matrix, st, x, y);
}

std::array<Complex, 4> chain_spectrum(const CMatrix& a) {
  require(a.rows() == 4 && a.cols() == 4, Errc::DimensionMismatch, "closed chain must be 4x4");
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(Eigen::Matrix4cd(a), false);
  std::array<Complex, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

ClosedChain closed_chain(const CMatrix& p, const DiscreteSpacetime& st, int x, int y) {
  ClosedChain c;
  c.matrix = discrete_kernel(p, st, x, y) * discrete_kernel(p, st, y, x);
  c.eigenvalues = chain_spectrum(c.matrix);
  return c;
}

ClosedChain closed_chain(const FermionicProjector& p, const DiscreteSpacetime& st, int x, int y) {
  return closed_chain(p.matrix, st, x, y);
}

double spectral_weight(const std::array<Complex, 4>& lambda) {
  double s = 0.0;
  for (const auto& l : lambda) s += std::abs(l);
  return s;
}

double spectral_weight_of_square(const std::array<Complex, 4>& lambda) {
  double s = 0.0;
  for (const auto& l : lambda) s += std::norm(l);
  return s;
}

ActionValues action_and_constraint(const CMatrix& p, const DiscreteSpacetime& st) {
  const int m = st.points();
  std::vector<CMatrix> k(static_cast<std::size_t>(m) * m);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) k[x * m + y] = discrete_kernel(p, st, x, y);
  ActionValues out;
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      auto lambda = chain_spectrum(k[x * m + y] * k[y * m + x]);
      double w = spectral_weight(lambda);
      out.action += spectral_weight_of_square(lambda);
      out.constraint += w * w;
    }
  return out;
}

const char* causal_name(Causal c) {
  switch (c) {
    case Causal::Timelike: return "timelike";
    case Causal::Spacelike: return "spacelike";
    case Causal::Lightlike: return "lightlike";
  }
  return "unknown";
}

Causal classify_causal(const std::array<Complex, 4>& lambda, double tol) {
  double scale = 1.0;
  for (const auto& l : lambda) scale = std::max(scale, std::abs(l));
  const double eps = tol * scale;

  bool all_real = std::all_of(lambda.begin(), lambda.end(), [&](const Complex& l) { return std::abs(l.imag()) <= eps; });
  if (all_real) return Causal::Timelike;

  bool all_complex = std::all_of(lambda.begin(), lambda.end(), [&](const Complex& l) { return std::abs(l.imag()) > eps; });
  if (!all_complex) return Causal::Lightlike;

  std::array<Complex, 4> s = lambda;
  std::sort(s.begin(), s.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return std::abs(a.imag()) < std::abs(b.imag());
  });
  std::array<bool, 4> used{};
  for (int i = 0; i < 4; ++i) {
    if (used[i]) continue;
    int partner = -1;
    for (int j = i + 1; j < 4; ++j)
      if (!used[j] && std::abs(s[j] - std::conj(s[i])) <= eps) { partner = j; break; }
    if (partner < 0) return Causal::Lightlike;
    used[i] = used[partner] = true;
  }
  double r0 = std::abs(s[0]);
  for (int i = 1; i < 4; ++i)
    if (std::abs(std::abs(s[i]) - r0) > eps) return Causal::Lightlike;
  return Causal::Spacelike;
}

Causal classify_causal(const ClosedChain& chain, double tol) { return classify_causal(chain.eigenvalues, tol); }

namespace {

// Columns of W are an S-orthonormal eigenbasis: W^* S W = diag(+1..., -1...).
struct ConeBasis {
  CMatrix pos;
  CMatrix neg;
  CMatrix to_coords;  // left inverse of [pos neg]
};

ConeBasis cone_basis(const IndefiniteSpace& space) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(space.gram());
  const int n = space.dim();
  ConeBasis cb;
  cb.pos.resize(n, space.positive());
  cb.neg.resize(n, space.negative());
  int ip = 0, iq = 0;
  for (int i = n - 1; i >= 0; --i) {
    double l = es.eigenvalues()(i);
    CVector w = es.eigenvectors().col(i) / std::sqrt(std::abs(l));
    if (l > 0) cb.pos.col(ip++) = w; else cb.neg.col(iq++) = w;
  }
  CMatrix all(n, n);
  all << cb.pos, cb.neg;
  cb.to_coords = all.inverse();
  return cb;
}

std::optional<ActionValues> evaluate(const DiscreteSpacetime& st, const CMatrix& frame) {
  try {
    auto p = frame_to_projector(st.space, frame);
    return action_and_constraint(p.matrix, st);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Largest s such that neg + s * pos stays negative definite.
double cone_limit(const CMatrix& y, const CMatrix& z) {
  CMatrix zz = z.adjoint() * z;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(zz);
  if (es.eigenvalues()(0) <= 1e-14) return 0.0;
  CMatrix inv_sqrt = es.operatorInverseSqrt();
  CMatrix m = inv_sqrt * (y.adjoint() * y) * inv_sqrt;
  Eigen::SelfAdjointEigenSolver<CMatrix> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  double r = em.eigenvalues()(em.eigenvalues().size() - 1);
  if (r <= 0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(r);
}

}  // namespace

CMatrix random_negative_frame(const DiscreteSpacetime& st, int f, Rng& rng) {
  require(f <= st.space.negative(), Errc::InfeasibleRank, "rank exceeds the negative index");
  ConeBasis cb = cone_basis(st.space);
  CMatrix z = complex_gaussian(st.space.negative(), f, rng);
  CMatrix y = complex_gaussian(st.space.positive(), f, rng);
  double lim = cone_limit(y, z);
  double u = 0.95 * uniform01(rng);
  if (std::isfinite(lim)) y *= u * lim;
  return cb.neg * z + cb.pos * y;
}

bool match_constraint(const DiscreteSpacetime& st, CMatrix& frame, double t0, double rel_tol) {
  ConeBasis cb = cone_basis(st.space);
  CMatrix c = cb.to_coords * frame;
  const int p = st.space.positive();
  CMatrix y = c.topRows(p);
  CMatrix z = c.bottomRows(st.space.negative());
  double lim = cone_limit(y, z);
  if (!(lim > 0.0)) return false;
  if (!std::isfinite(lim)) lim = 1.0;

  auto t_of = [&](double s) -> std::optional<double> {
    auto v = evaluate(st, cb.neg * z + s * (cb.pos * y));
    if (!v) return std::nullopt;
    return v->constraint;
  };
  // Scan towards the cone boundary for the first bracket, then bisect.
  const int steps = 96;
  double s_prev = 0.0;
  auto t_prev = t_of(0.0);
  if (!t_prev) return false;
  if (std::abs(*t_prev - t0) <= rel_tol * t0) { frame = cb.neg * z; return true; }
  for (int k = 1; k <= steps; ++k) {
    double frac = 1.0 - std::pow(1.0 - static_cast<double>(k) / steps, 2.0) * (1.0 - 1e-6);
    double s = frac * lim * (1.0 - 1e-9);
    auto t = t_of(s);
    if (!t) break;
    if ((*t_prev - t0) * (*t - t0) <= 0.0) {
      double lo = s_prev, hi = s, tlo = *t_prev;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        auto tm = t_of(mid);
        if (!tm) return false;
        if (std::abs(*tm - t0) <= rel_tol * t0) { lo = hi = mid; break; }
        if ((tlo - t0) * (*tm - t0) <= 0.0) hi = mid; else { lo = mid; tlo = *tm; }
      }
      double s_star = 0.5 * (lo + hi);
      frame = cb.neg * z + s_star * (cb.pos * y);
      auto fin = t_of(s_star);
      return fin && std::abs(*fin - t0) <= std::max(rel_tol, 1e-9) * t0;
    }
    s_prev = s;
    t_prev = t;
  }
  return false;
}

namespace {

using Params = Eigen::VectorXd;

Params to_params(const CMatrix& x) {
  Params p(2 * x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(2 * i) = x.data()[i].real();
    p(2 * i + 1) = x.data()[i].imag();
  }
  return p;
}

CMatrix from_params(const Params& p, int rows, int cols) {
  CMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = Complex(p(2 * i), p(2 * i + 1));
  return x;
}

struct Gradients {
  Params action;
  Params constraint;
  bool ok = true;
};

Gradients central_gradients(const DiscreteSpacetime& st, const Params& p, int rows, int cols) {
  const double h = 1e-6 * (1.0 + p.norm());
  Gradients g;
  g.action.resize(p.size());
  g.constraint.resize(p.size());
  Params q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    q(i) = p(i) + h;
    auto up = evaluate(st, from_params(q, rows, cols));
    q(i) = p(i) - h;
    auto dn = evaluate(st, from_params(q, rows, cols));
    q(i) = p(i);
    if (!up || !dn) { g.ok = false; return g; }
    g.action(i) = (up->action - dn->action) / (2 * h);
    g.constraint(i) = (up->constraint - dn->constraint) / (2 * h);
  }
  return g;
}

struct RestartOutcome {
  CMatrix frame;
  ActionValues values;
  double initial_action = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Pulls `p` back onto T = t0 along the constraint gradient `dir`.
std::optional<std::pair<Params, ActionValues>> restore_constraint(const DiscreteSpacetime& st, Params p,
                                                                  const Params& dir, double t0, double tol,
                                                                  int rows, int cols) {
  double dd = dir.squaredNorm();
  if (dd == 0.0) return std::nullopt;
  for (int it = 0; it < 12; ++it) {
    auto v = evaluate(st, from_params(p, rows, cols));
    if (!v) return std::nullopt;
    double r = v->constraint - t0;
    if (std::abs(r) <= tol * t0) return std::make_pair(p, *v);
    p -= (r / dd) * dir;
  }
  return std::nullopt;
}

RestartOutcome run_restart(const DiscreteSpacetime& st, int f, double t0, const MinimizeOptions& opts,
                           int restart) {
  const int n = st.dim();
  CMatrix x0;
  bool matched = false;
  for (int attempt = 0; attempt < 64 && !matched; ++attempt) {
    Rng rng = stream(opts.seed, static_cast<std::uint64_t>(restart) * 1000u + attempt);
    x0 = random_negative_frame(st, f, rng);
    matched = match_constraint(st, x0, t0, opts.constraint_tolerance);
  }
  require(matched, Errc::InvalidArgument, "constraint value T0 is not attainable");
  x0 = frame_to_projector(st.space, x0).frame;

  RestartOutcome out;
  Params p = to_params(x0);
  ActionValues cur = *evaluate(st, x0);
  out.initial_action = cur.action;
  out.trace.push_back(cur.action);
  auto merit = [&](const ActionValues& v) { return v.action + opts.penalty * (v.constraint - t0) * (v.constraint - t0); };

  double alpha = 0.1;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    Gradients g = central_gradients(st, p, n, f);
    if (!g.ok) break;
    double gt2 = g.constraint.squaredNorm();
    Params d = -g.action;
    if (gt2 > 0) d += (g.action.dot(g.constraint) / gt2) * g.constraint;
    double dn = d.norm();
    if (dn <= opts.gradient_tolerance * (1.0 + std::abs(cur.action))) break;
    d /= dn;

    bool accepted = false;
    for (double a = alpha; a >= 1e-12; a *= 0.5) {
      auto res = restore_constraint(st, p + a * d, g.constraint, t0, opts.constraint_tolerance, n, f);
      if (!res) continue;
      if (res->second.action < cur.action && merit(res->second) < merit(cur)) {
        // Re-project: keep the frame orthonormal so the parametrization stays well conditioned.
        CMatrix xn = frame_to_projector(st.space, from_params(res->first, n, f)).frame;
        auto vn = evaluate(st, xn);
        if (!vn || vn->action >= cur.action) continue;
        p = to_params(xn);
        cur = *vn;
        out.trace.push_back(cur.action);
        alpha = std::min(1.0, 2.0 * a);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.iterations = it;
  out.frame = from_params(p, n, f);
  out.values = cur;
  return out;
}

}  // namespace

MinimizeResult minimize_action(const DiscreteSpacetime& st, int f, double t0, const MinimizeOptions& opts) {
  require(f >= 0, Errc::InvalidArgument, "negative rank");
  require(f <= st.space.negative(), Errc::InfeasibleRank, "rank exceeds the negative index 2m");
  MinimizeResult best;
  if (f == 0) {
    best.projector = frame_to_projector(st.space, CMatrix(st.dim(), 0));
    best.constraint_met = true;
    return best;
  }
  require(t0 > 0.0, Errc::InvalidArgument, "T0 must be positive");
  bool have = false;
  bool any_progress = false;
  for (int r = 0; r < opts.restarts; ++r) {
    RestartOutcome o = run_restart(st, f, t0, opts, r);
    if (o.values.action < o.initial_action) any_progress = true;
    if (!have || o.values.action < best.action) {
      have = true;
      best.projector = frame_to_projector(st.space, o.frame);
      best.action = o.values.action;
      best.constraint = o.values.constraint;
      best.initial_action = o.initial_action;
      best.iterations = o.iterations;
      best.best_restart = r;
      best.trace = o.trace;
    }
  }
  best.no_progress = !any_progress;
  best.constraint_met = std::abs(best.constraint - t0) <= 1e-6 * t0;
  return best;
}

}  // namespace fpl::core
