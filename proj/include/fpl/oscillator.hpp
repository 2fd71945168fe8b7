#pragma once

// Classical and quantum harmonic oscillators in truncated Hermite bases, the
// isometric embedding between them, phase-space trajectory ensembles, plane-wave
// mode collections and amplitudes relative to a reference Fock state.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpl/common.hpp"
#include "fpl/fock.hpp"

namespace fpl::osc {

/// Coefficients over Psi_n, n = 0..n_max.
struct QuantumState {
  double omega = 1.0;
  int n_max = 0;
  CVector coeffs;

  static QuantumState basis(double omega, int n_max, int n);
  static QuantumState from_coeffs(double omega, CVector c);
  double norm() const { return coeffs.norm(); }
};

/// Index of (nx, ny) in the 2-D Hermite basis ordered by total degree, then ny.
int hermite2_index(int nx, int ny);
int hermite2_size(int n_max);
std::pair<int, int> hermite2_levels(int index);

/// Coefficients over h_nx(x) h_ny(y) with nx + ny <= n_max; x = q, y = p / omega.
struct ClassicalState {
  double omega = 1.0;
  int n_max = 0;
  CVector coeffs;

  double norm() const { return coeffs.norm(); }
  /// Wave function at (x, y), scalar product with measure dx dy.
  Complex value(double x, double y) const;
};

/// iota: Psi_n -> 2^{-n/2} sum_k (-i)^k sqrt(C(n,k)) |n-k, k>.
ClassicalState embed(const QuantumState& psi, int classical_n_max = -1);
/// iota as a matrix from the 1-D basis (n <= n_max) into the 2-D basis.
CMatrix embedding_matrix(int n_max);

struct QuantumOperators {
  CMatrix a, a_dag, h, q, p;
};
struct ClassicalOperators {
  CMatrix a_x, a_y, a_cl, a_cl_dag, h, q, p;
  CMatrix rotation;  // Lambda = i (a_x^* a_y - a_y^* a_x)
};

QuantumOperators quantum_operators(double omega, int n_max);
ClassicalOperators classical_operators(double omega, int n_max);

QuantumState evolve(const QuantumState& psi, double t);
ClassicalState evolve(const ClassicalState& psi, double t);

/// ||U_cl(t) iota Psi - iota U(t) e^{i omega t / 2} Psi||.
double intertwine_residual(const QuantumState& psi, double t);

/// Frobenius norm of A_cl iota - iota A over the columns n <= n_max - 2.
double operator_intertwine_residual(const CMatrix& a_cl, const CMatrix& a_quantum, int n_max);

struct TrajectoryEnsemble {
  std::vector<std::array<double, 2>> points;  // (x, y) = (q, p / omega)
  std::vector<Complex> weights;
};

/// Kronecker-delta scalar product of two ensembles.
Complex discrete_inner(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b);

/// Cell-centered side x side grid on [-6 sigma, 6 sigma]^2, weight psi * cell area.
TrajectoryEnsemble sample_ensemble(const ClassicalState& psi, int side);
/// Phase flow: rotation of every point, weights fixed.
TrajectoryEnsemble flow(const TrajectoryEnsemble& e, double omega, double t);

struct TrajectoryCurve {
  int side = 0;
  std::vector<double> times;
  std::vector<double> discrepancy;  // per time, max over the test family
  double max_discrepancy = 0.0;
};

/// Overlaps with x^j y^k exp(-omega (x^2 + y^2) / 2), j + k <= 3, ensemble versus exact.
TrajectoryCurve trajectory_approximation(const ClassicalState& psi, int side, const std::vector<double>& times);

struct Mode {
  std::array<int, 3> n{};  // k = 2 pi n / l
  int beta = 1;
  double omega = 0.0;
};

struct ModeCollection {
  double box = 0.0;
  double cutoff = 0.0;
  std::vector<Mode> modes;
};

/// All (k, beta) with 0 < |k| <= cutoff, beta in {1, 2}; k = 0 is omitted.
ModeCollection mode_collection(double box, double cutoff);

constexpr int kMaxJointModes = 3;

/// Tensor product of the factor-wise embeddings (first factor slowest).
CVector multimode_embed(const std::vector<QuantumState>& factors);
double multimode_intertwine_residual(const std::vector<QuantumState>& factors, double t);

struct Amplitude {
  Complex phi = 0.0;
  double residual = 0.0;
};

/// phi = <ref|psi> / <ref|ref>; NotCollinear if ||psi - phi ref|| > 1e-6 ||psi||.
Amplitude extract_amplitude(const fock::FockVector& psi, const fock::FockVector& reference);

struct ReferenceAmplitudeMap {
  struct Entry {
    int configuration = 0;
    Amplitude amplitude;
    std::optional<fock::FockVector> state;  // Fock-valued variant
  };
  std::map<int, Entry> entries;  // keyed by subsystem label

  /// phi(a) / phi(b); defined only within one configuration.
  Complex relative_phase(int a, int b) const;
};

struct Subsystem {
  int label = 0;
  int configuration = 0;
  fock::FockVector state;
};

/// One reference per configuration id; keeps the Fock states when `keep_states`.
ReferenceAmplitudeMap assemble_map(const std::vector<Subsystem>& subsystems,
                                   const std::map<int, fock::FockVector>& references, bool keep_states = false);

}  // namespace fpl::osc
