#include "fpl/oscillator.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "fpl/linalg.hpp"

namespace fpl::osc {

namespace {

void check_omega(double omega) {
  require(std::isfinite(omega) && omega > 0.0, Errc::InvalidArgument, "frequency must be positive");
}

// Polynomial parts p_n of the standard Hermite functions phi_n(u) = p_n(u) exp(-u^2/2).
RVector hermite_poly(int n_max, double u) {
  RVector p(n_max + 1);
  p(0) = std::pow(M_PI, -0.25);
  if (n_max >= 1) p(1) = std::sqrt(2.0) * u * p(0);
  for (int n = 1; n < n_max; ++n)
    p(n + 1) = std::sqrt(2.0 / (n + 1)) * u * p(n) - std::sqrt(double(n) / (n + 1)) * p(n - 1);
  return p;
}

// h_n(x) for frequency omega, normalized in L^2(dx).
RVector hermite_functions(int n_max, double omega, double x) {
  double u = std::sqrt(omega) * x;
  return hermite_poly(n_max, u) * (std::pow(omega, 0.25) * std::exp(-0.5 * u * u));
}

struct GaussHermite {
  RVector nodes, weights;
};

// Golub-Welsch for the weight exp(-u^2).
GaussHermite gauss_hermite(int n) {
  RMatrix j = RMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(j);
  GaussHermite g;
  g.nodes = es.eigenvalues();
  g.weights = std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square();
  return g;
}

CMatrix rotation_exponential(const CMatrix& lambda, int n_max, double angle) {
  CMatrix out = CMatrix::Zero(lambda.rows(), lambda.cols());
  for (int d = 0; d <= n_max; ++d) {
    int off = d * (d + 1) / 2;
    CMatrix block = lambda.block(off, off, d + 1, d + 1);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(block);
    CVector ph(d + 1);
    for (int k = 0; k <= d; ++k) ph(k) = std::polar(1.0, -angle * es.eigenvalues()(k));
    out.block(off, off, d + 1, d + 1) = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  }
  return out;
}

}  // namespace

QuantumState QuantumState::basis(double omega, int n_max, int n) {
  check_omega(omega);
  require(n >= 0 && n <= n_max, Errc::IndexOutOfRange, "level outside truncation");
  QuantumState s{omega, n_max, CVector::Zero(n_max + 1)};
  s.coeffs(n) = 1.0;
  return s;
}

QuantumState QuantumState::from_coeffs(double omega, CVector c) {
  check_omega(omega);
  require(c.size() >= 1, Errc::InvalidArgument, "empty coefficient vector");
  int n_max = static_cast<int>(c.size()) - 1;
  return {omega, n_max, std::move(c)};
}

int hermite2_index(int nx, int ny) {
  int d = nx + ny;
  return d * (d + 1) / 2 + ny;
}

int hermite2_size(int n_max) { return (n_max + 1) * (n_max + 2) / 2; }

std::pair<int, int> hermite2_levels(int index) {
  int d = 0;
  while ((d + 1) * (d + 2) / 2 <= index) ++d;
  int ny = index - d * (d + 1) / 2;
  return {d - ny, ny};
}

Complex ClassicalState::value(double x, double y) const {
  RVector hx = hermite_functions(n_max, omega, x);
  RVector hy = hermite_functions(n_max, omega, y);
  Complex s = 0.0;
  for (int i = 0; i < coeffs.size(); ++i) {
    auto [nx, ny] = hermite2_levels(i);
    s += coeffs(i) * (hx(nx) * hy(ny));
  }
  return s;
}

CMatrix embedding_matrix(int n_max) {
  require(n_max >= 0, Errc::InvalidArgument, "negative truncation");
  CMatrix e = CMatrix::Zero(hermite2_size(n_max), n_max + 1);
  const Complex mi(0.0, -1.0);
  for (int n = 0; n <= n_max; ++n) {
    Complex ph = 1.0;
    for (int k = 0; k <= n; ++k) {
      e(hermite2_index(n - k, k), n) = std::pow(2.0, -0.5 * n) * std::sqrt(binomial(n, k)) * ph;
      ph *= mi;
    }
  }
  return e;
}

ClassicalState embed(const QuantumState& psi, int classical_n_max) {
  int cmax = classical_n_max < 0 ? psi.n_max : classical_n_max;
  for (int n = cmax + 1; n <= psi.n_max; ++n)
    require(psi.coeffs(n) == Complex(0.0), Errc::TruncationOverflow, "image exceeds the classical truncation");
  int used = std::min(cmax, psi.n_max);
  CMatrix e = embedding_matrix(cmax);
  ClassicalState out{psi.omega, cmax, e.leftCols(used + 1) * psi.coeffs.head(used + 1)};
  return out;
}

QuantumOperators quantum_operators(double omega, int n_max) {
  check_omega(omega);
  QuantumOperators o;
  o.a = CMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) o.a(n - 1, n) = std::sqrt(double(n));
  o.a_dag = o.a.adjoint();
  o.h = omega * (o.a_dag * o.a + 0.5 * CMatrix::Identity(n_max + 1, n_max + 1));
  o.q = (o.a + o.a_dag) / std::sqrt(2.0 * omega);
  o.p = Complex(0.0, -std::sqrt(omega / 2.0)) * (o.a - o.a_dag);
  return o;
}

ClassicalOperators classical_operators(double omega, int n_max) {
  check_omega(omega);
  const int n = hermite2_size(n_max);
  ClassicalOperators o;
  o.a_x = CMatrix::Zero(n, n);
  o.a_y = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    auto [nx, ny] = hermite2_levels(i);
    if (nx > 0) o.a_x(hermite2_index(nx - 1, ny), i) = std::sqrt(double(nx));
    if (ny > 0) o.a_y(hermite2_index(nx, ny - 1), i) = std::sqrt(double(ny));
  }
  const Complex im(0.0, 1.0);
  o.a_cl = (o.a_x + im * o.a_y) / std::sqrt(2.0);
  o.a_cl_dag = o.a_cl.adjoint();
  o.h = omega * (o.a_cl_dag * o.a_cl + 0.5 * CMatrix::Identity(n, n));
  o.q = (o.a_cl + o.a_cl_dag) / std::sqrt(2.0 * omega);
  o.p = Complex(0.0, -std::sqrt(omega / 2.0)) * (o.a_cl - o.a_cl_dag);
  o.rotation = im * (o.a_x.adjoint() * o.a_y - o.a_y.adjoint() * o.a_x);
  return o;
}

QuantumState evolve(const QuantumState& psi, double t) {
  require(std::isfinite(t), Errc::InvalidArgument, "time must be finite");
  QuantumState out = psi;
  for (int n = 0; n <= psi.n_max; ++n) out.coeffs(n) *= std::polar(1.0, -(n + 0.5) * psi.omega * t);
  return out;
}

ClassicalState evolve(const ClassicalState& psi, double t) {
  require(std::isfinite(t), Errc::InvalidArgument, "time must be finite");
  ClassicalOperators o = classical_operators(psi.omega, psi.n_max);
  ClassicalState out = psi;
  out.coeffs = rotation_exponential(o.rotation, psi.n_max, psi.omega * t) * psi.coeffs;
  return out;
}

double intertwine_residual(const QuantumState& psi, double t) {
  ClassicalState lhs = evolve(embed(psi), t);
  QuantumState r = evolve(psi, t);
  r.coeffs *= std::polar(1.0, 0.5 * psi.omega * t);
  return (lhs.coeffs - embed(r).coeffs).norm();
}

double operator_intertwine_residual(const CMatrix& a_cl, const CMatrix& a_quantum, int n_max) {
  require(n_max >= 2, Errc::InvalidArgument, "safe window needs n_max >= 2");
  CMatrix e = embedding_matrix(n_max);
  require(a_cl.rows() == e.rows() && a_quantum.rows() == e.cols(), Errc::DimensionMismatch, "operator sizes");
  CMatrix d = a_cl * e - e * a_quantum;
  return d.leftCols(n_max - 1).norm();
}

Complex discrete_inner(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b) {
  require(a.points.size() == a.weights.size() && b.points.size() == b.weights.size(), Errc::DimensionMismatch,
          "points and weights differ in length");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    for (std::size_t j = 0; j < b.points.size(); ++j)
      if (a.points[i] == b.points[j]) s += std::conj(a.weights[i]) * b.weights[j];
  return s;
}

TrajectoryEnsemble sample_ensemble(const ClassicalState& psi, int side) {
  require(side >= 2, Errc::DegenerateGrid, "grid needs at least two points per side");
  check_omega(psi.omega);
  const double half = 6.0 / std::sqrt(psi.omega);
  const double h = 2.0 * half / side;
  TrajectoryEnsemble e;
  e.points.reserve(side * side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      double x = -half + (i + 0.5) * h, y = -half + (j + 0.5) * h;
      e.points.push_back({x, y});
      e.weights.push_back(psi.value(x, y) * (h * h));
    }
  return e;
}

TrajectoryEnsemble flow(const TrajectoryEnsemble& e, double omega, double t) {
  const double c = std::cos(omega * t), s = std::sin(omega * t);
  TrajectoryEnsemble out = e;
  for (auto& p : out.points) p = {c * p[0] + s * p[1], -s * p[0] + c * p[1]};
  return out;
}

TrajectoryCurve trajectory_approximation(const ClassicalState& psi, int side, const std::vector<double>& times) {
  require(side >= 2, Errc::DegenerateGrid, "grid needs at least two points per side");
  check_omega(psi.omega);
  const double w = psi.omega;
  std::vector<std::pair<int, int>> family;
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; j + k <= 3; ++k) family.push_back({j, k});

  // One-dimensional moments I_j(n) = int x^j exp(-w x^2 / 2) h_n(x) dx.
  GaussHermite gh = gauss_hermite(48);
  RMatrix moments = RMatrix::Zero(4, psi.n_max + 1);
  for (int q = 0; q < gh.nodes.size(); ++q) {
    double u = gh.nodes(q);
    RVector p = hermite_poly(psi.n_max, u);
    for (int j = 0; j <= 3; ++j)
      moments.row(j) += gh.weights(q) * std::pow(u, j) * p.transpose();
  }
  for (int j = 0; j <= 3; ++j) moments.row(j) *= std::pow(w, 0.25 - 0.5 * j - 0.5);

  TrajectoryEnsemble base = sample_ensemble(psi, side);
  TrajectoryCurve curve;
  curve.side = side;
  curve.times = times;
  for (double t : times) {
    ClassicalState exact = evolve(psi, t);
    TrajectoryEnsemble e = flow(base, w, t);
    double worst = 0.0;
    for (auto [j, k] : family) {
      Complex ex = 0.0;
      for (int i = 0; i < exact.coeffs.size(); ++i) {
        auto [nx, ny] = hermite2_levels(i);
        ex += exact.coeffs(i) * (moments(j, nx) * moments(k, ny));
      }
      Complex en = 0.0;
      for (std::size_t a = 0; a < e.points.size(); ++a) {
        double x = e.points[a][0], y = e.points[a][1];
        en += std::pow(x, j) * std::pow(y, k) * std::exp(-0.5 * w * (x * x + y * y)) * e.weights[a];
      }
      worst = std::max(worst, std::abs(en - ex));
    }
    curve.discrepancy.push_back(worst);
    curve.max_discrepancy = std::max(curve.max_discrepancy, worst);
  }
  return curve;
}

ModeCollection mode_collection(double box, double cutoff) {
  require(box > 0 && cutoff >= 0 && std::isfinite(box) && std::isfinite(cutoff), Errc::InvalidArgument,
          "box length and cutoff must be positive");
  ModeCollection mc{box, cutoff, {}};
  const double unit = 2.0 * M_PI / box;
  const int r = static_cast<int>(std::floor(cutoff / unit)) + 1;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b)
      for (int c = -r; c <= r; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        double k = unit * std::sqrt(double(a * a + b * b + c * c));
        if (k > cutoff * (1.0 + 1e-12)) continue;
        for (int beta = 1; beta <= 2; ++beta) mc.modes.push_back({{a, b, c}, beta, k});
      }
  return mc;
}

namespace {

CVector kron_all(const std::vector<CVector>& vs) {
  CVector out = CVector::Ones(1);
  for (const auto& v : vs) out = Eigen::kroneckerProduct(out, v).eval();
  return out;
}

void check_budget(const std::vector<QuantumState>& factors) {
  require(!factors.empty(), Errc::InvalidArgument, "no modes given");
  require(static_cast<int>(factors.size()) <= kMaxJointModes, Errc::BudgetExceeded,
          "at most three modes can be embedded jointly");
}

}  // namespace

CVector multimode_embed(const std::vector<QuantumState>& factors) {
  check_budget(factors);
  std::vector<CVector> parts;
  for (const auto& f : factors) parts.push_back(embed(f).coeffs);
  return kron_all(parts);
}

double multimode_intertwine_residual(const std::vector<QuantumState>& factors, double t) {
  check_budget(factors);
  std::vector<CVector> lhs, rhs;
  for (const auto& f : factors) {
    lhs.push_back(evolve(embed(f), t).coeffs);
    QuantumState r = evolve(f, t);
    r.coeffs *= std::polar(1.0, 0.5 * f.omega * t);
    rhs.push_back(r.coeffs);
  }
  std::vector<CVector> rhs_emb;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    QuantumState r = factors[i];
    r.coeffs = rhs[i];
    rhs_emb.push_back(embed(r).coeffs);
  }
  return (kron_all(lhs) - kron_all(rhs_emb)).norm();
}

Amplitude extract_amplitude(const fock::FockVector& psi, const fock::FockVector& reference) {
  double rn = reference.norm2();
  require(rn > 0.0, Errc::InvalidArgument, "reference state vanishes");
  Amplitude a;
  a.phi = fock::fock_inner(reference, psi) / rn;
  a.residual = std::sqrt((psi - a.phi * reference).norm2());
  require(a.residual <= 1e-6 * std::sqrt(psi.norm2()), Errc::NotCollinear, "state is not a multiple of the reference");
  return a;
}

Complex ReferenceAmplitudeMap::relative_phase(int a, int b) const {
  auto ia = entries.find(a), ib = entries.find(b);
  require(ia != entries.end() && ib != entries.end(), Errc::IndexOutOfRange, "unknown subsystem label");
  require(ia->second.configuration == ib->second.configuration, Errc::InvalidArgument,
          "amplitudes of different field configurations cannot be compared");
  require(ib->second.amplitude.phi != Complex(0.0), Errc::InvalidArgument, "zero amplitude");
  return ia->second.amplitude.phi / ib->second.amplitude.phi;
}

ReferenceAmplitudeMap assemble_map(const std::vector<Subsystem>& subsystems,
                                   const std::map<int, fock::FockVector>& references, bool keep_states) {
  ReferenceAmplitudeMap m;
  for (const auto& s : subsystems) {
    auto r = references.find(s.configuration);
    require(r != references.end(), Errc::InvalidArgument, "no reference for this configuration");
    ReferenceAmplitudeMap::Entry e;
    e.configuration = s.configuration;
    e.amplitude = extract_amplitude(s.state, r->second);
    if (keep_states) e.state = s.state;
    require(m.entries.emplace(s.label, std::move(e)).second, Errc::InvalidArgument, "duplicate subsystem label");
  }
  return m;
}

}  // namespace fpl::osc
