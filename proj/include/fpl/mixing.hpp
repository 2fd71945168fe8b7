#pragma once

// Microscopic mixing: region partitions, decoherence by SU(f) unitaries, Haar
// Monte Carlo for the moment identities, the measurement formalism on the
// effective Fock space, the layered singlet and the local mixing kernel.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "fpl/common.hpp"
#include "fpl/fock.hpp"
#include "fpl/random.hpp"

namespace fpl::mixing {

using SparseOp = Eigen::SparseMatrix<Complex>;

struct RegionPartition {
  std::vector<int> labels;  // per site, 0-based region index
  int regions = 0;

  int sites() const { return static_cast<int>(labels.size()); }
  static RegionPartition from_labels(std::vector<int> labels);
};

/// One-particle space of `sites` grid points times `components` internal
/// degrees of freedom, coordinate index = site * components + component.
struct MixedSystem {
  int components = 1;
  CMatrix states;  // dim x f
  RegionPartition partition;
  std::vector<CMatrix> decoherence;  // one SU(f) per region, empty means identity
  int n_particles = 0;
  int n_antiparticles = 0;

  int sites() const { return partition.sites(); }
  int dim() const { return static_cast<int>(states.rows()); }
  int particles() const { return static_cast<int>(states.cols()); }
  void validate() const;
};

/// psi_j chi_{M_a} for all j.
CMatrix region_restriction(const MixedSystem& sys, int region);
/// sum_k U_a(j,k) psi_k^(a), summed over regions.
CMatrix decohered_states(const MixedSystem& sys);

/// Sum of coefficient-weighted wedges of one-particle factors.
struct Wedge {
  Complex coef = 1.0;
  CMatrix factors;  // dim x n
};

struct WedgeSum {
  int dim = 0;
  int sector = 0;
  std::vector<Wedge> terms;

  static WedgeSum single(const CMatrix& factors, Complex coef = 1.0);
  fock::FockVector to_fock() const;
};

/// Per-region wedges of the decohered restrictions (factor form, any dimension).
std::vector<WedgeSum> subsystem_wedges(const MixedSystem& sys);
/// Same as Fock vectors; throws CapExceeded for large spaces.
std::vector<fock::FockVector> subsystem_wavefunctions(const MixedSystem& sys);

/// P(x,y) between internal components, from the decohered states.
CMatrix cross_kernel(const MixedSystem& sys, int x, int y);

bool is_special_unitary(const CMatrix& u, double tol = 1e-10);
/// Haar on U(f) (Gaussian QR with phase-fixed R).
CMatrix haar_unitary(int f, Rng& rng);
/// Haar on SU(f): haar_unitary times det^{-1/f}, principal branch.
CMatrix haar_sample(int f, Rng& rng);

struct Estimate {
  Complex mean = 0.0;
  double se_real = 0.0;
  double se_imag = 0.0;
  long samples = 0;

  /// |Re - Re t| <= k se_real and |Im - Im t| <= k se_imag.
  bool within(Complex target, double k) const;
  double deviation_in_se(Complex target) const;
};

/// Running mean / standard error of complex samples.
class Accumulator {
 public:
  void add(Complex z);
  Estimate estimate() const;

 private:
  long n_ = 0;
  double sr_ = 0, si_ = 0, srr_ = 0, sii_ = 0;
};

struct EntryProduct {
  std::vector<std::pair<int, int>> entries;  // E[prod U(i,j)]
};
struct AbsSquare {
  int row = 0, col = 0;  // E|U(row,col)|^2
};
/// Ratio of decohered to coherent cross-kernel Frobenius norm for in-phase
/// one-particle values (all psi_j(x) equal, all psi_k(y) equal).
struct KernelRatio {};
using MomentSpec = std::variant<EntryProduct, AbsSquare, KernelRatio>;

/// Haar SU(f) estimates; sample i uses stream(seed, i).
std::vector<Estimate> mc_moments(int f, const std::vector<MomentSpec>& specs, long samples, std::uint64_t seed);
Estimate mc_moments(int f, const MomentSpec& spec, long samples, std::uint64_t seed);

enum class MeasureKind { Haar, TraceWeighted, DetWeighted };

/// Haar, or density proportional to |Tr(1+U)|^alpha or |det(1+U)|^alpha.
struct MeasureSpec {
  MeasureKind kind = MeasureKind::Haar;
  double alpha = 0.0;
};

struct MetropolisOptions {
  int burn_in = 1000;
  int thinning = 10;
  double target_acceptance = 0.3;
};

/// c(U) = sign(I1) det(X1 + U X2), X_a = diag of the indicator of I_a and {n..f-1}.
Complex det_coefficient(const CMatrix& u, int n, const std::vector<int>& i1);

struct DetMoments {
  Estimate first;
  std::vector<Estimate> second;  // E[conj c(I1) c(J)] for each requested J
  double acceptance = 1.0;
};

DetMoments det_moments(int f, int n, const std::vector<int>& i1, const MeasureSpec& measure, long samples,
                       std::uint64_t seed, const std::vector<std::vector<int>>& second_partners = {},
                       const MetropolisOptions& mopts = {});

/// Measurement scalar product on the one-particle space.
struct MeasurementGram {
  SparseOp form;

  int dim() const { return static_cast<int>(form.rows()); }
  static MeasurementGram identity(int dim);
  static MeasurementGram from_dense(const CMatrix& g);
  /// (psi|phi) = <psi|phi> + (<S psi|phi> + <psi|S phi>)/2, S the periodic shift
  /// by `shift` sites.
  static MeasurementGram shifted(int sites, int components, int shift);
  /// Smallest eigenvalue; dense, for moderate dimensions.
  double min_eigenvalue() const;
};

/// Induced n-particle form in Slater normalization: sum conj(c) c' det(V^* G W).
/// The 1/n! normalization is `induced_form(...) / n!`.
Complex induced_form(const WedgeSum& a, const WedgeSum& b, const MeasurementGram& g);
CMatrix family_gram(const std::vector<WedgeSum>& family, const MeasurementGram& g);

struct EffectiveFockSpace {
  CMatrix gram;          // family Gram
  RVector eigenvalues;   // retained, descending
  CMatrix basis;         // retained eigenvectors (L x r)
  double cutoff = 0.0;   // absolute threshold used

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  /// pi_n: family coefficients -> quotient coordinates.
  CVector project(const CVector& coefficients) const;
  /// Right inverse of project.
  CVector include(const CVector& coords) const;
  /// Matrix of an operator with family matrix elements m_ab = (Psi_a|O Psi_b).
  CMatrix effective_operator(const CMatrix& m) const;
};

EffectiveFockSpace effective_space(const CMatrix& family_gram, double rel_cutoff = 1e-10);
EffectiveFockSpace effective_space(const std::vector<WedgeSum>& family, const MeasurementGram& g,
                                   double rel_cutoff = 1e-10);

/// Number-preserving observable acting on factor-form wedges.
class FockObservable {
 public:
  static FockObservable identity();
  /// O^F, slot by slot.
  static FockObservable lifted(SparseOp o);
  /// :O1^F O2^F: = sum over ordered slot pairs k != l.
  static FockObservable wick(SparseOp o1, SparseOp o2);

  WedgeSum apply(const WedgeSum& w) const;

 private:
  int kind_ = 0;
  SparseOp o1_, o2_;
};

struct RuleB {
  Complex value = 0.0;
  double symmetry_defect = 0.0;  // |sum (Psi_a|O Psi_b) - (O Psi_a|Psi_b)| / |denominator|
  double region_leak = 0.0;      // weight of O Psi_b outside region b
  CMatrix numerators;            // (Psi_a | O Psi_b)
  CMatrix denominators;          // (Psi_a | Psi_b)
};

/// Sum_{ab} (Psi_a|O Psi_b) / Sum_{ab} (Psi_a|Psi_b). `regions[a]` is the
/// 0/1 indicator of region a on the one-particle coordinates (may be empty).
RuleB expectation_rule_B(const std::vector<WedgeSum>& family, const FockObservable& o, const MeasurementGram& g,
                         const std::vector<RVector>& regions = {});

struct Collapse {
  CVector state;
  double eigenvalue = 0.0;
  double probability = 0.0;
  int eigenspace = -1;
};

/// Eigenspaces ordered by ascending eigenvalue. With no index, samples by the Born rule.
Collapse collapse_rule_D(const CVector& psi_eff, const CMatrix& o_eff, std::optional<int> eigenspace, Rng* rng = nullptr);
int eigenspace_count(const CMatrix& o_eff);

struct SingletConfig {
  int grid = 4096;
  int epsilon = 16;
  int bump_width = 256;
  int alice_center = -1;  // default grid / 4
  int bob_center = -1;    // default 3 grid / 4
};

struct SingletReport {
  int epsilon = 0;
  std::vector<std::string> names;
  std::vector<double> values, targets, errors;
  double max_error = 0.0;
  double fidelity = 0.0;
  int effective_dim = 0;
  double symmetry_defect = 0.0;
  double imaginary_residue = 0.0;
  CVector effective_state;
  double collapse_eigenvalue = 0.0;
};

SingletReport singlet_experiment(const SingletConfig& cfg, std::uint64_t seed);

/// Normalized truncated Gaussian on a periodic grid: sigma = width / 6,
/// support |x - center| <= width / 2.
RVector bump(int grid, int center, int width);

struct TermSelector {
  std::vector<int> region2_slots;   // slots taking the decohered region-2 component
  std::vector<int> region2_labels;  // which psi_k^(2) appear, ascending
};

/// Coefficient of the selected term of prod_j (psi_j^(1) + sum_k U_jk psi_k^(2))
/// in an abstract basis of region copies: the wedge amplitude at the term's basis
/// set. With n < f the labels >= n are sea states shared by both regions.
Complex superposition_extraction(const CMatrix& u, const TermSelector& term, int n);
/// Haar mean of a term coefficient, sample i from stream(seed, i).
Estimate mixed_term_mean(int f, const TermSelector& term, int n, long samples, std::uint64_t seed);
/// Coefficient of wedge(psi^(1)_{I1}, psi^(2)_{I2}, sea) after sea identification.
Complex identified_coefficient(const CMatrix& u, int n, const std::vector<int>& i1);

/// P(x,y) = -sum_{jl} (U(x) U(y)^{-1})_{jl} |psi_j(x)><psi_l(y)|.
CMatrix local_mixing_kernel(const CMatrix& states, int components, const std::vector<CMatrix>& u_sites, int x, int y);

enum class Coherence { Coherent, Decoherent };
struct CoherenceResult {
  double ratio = 0.0;  // ||P_mixed(x,y)|| / ||P_unmixed(x,y)||
  Coherence relation = Coherence::Coherent;
};

CoherenceResult coherence_classify(const CMatrix& states, int components, const std::vector<CMatrix>& u_sites, int x,
                                   int y, double threshold = 0.5);

/// Three sites x, y, z with x~y and y~z coherent but x, z decoherent.
struct HolographicScenario {
  CMatrix states;
  int components = 2;
  std::vector<CMatrix> u_sites;
  int x = 0, y = 1, z = 2;
};

HolographicScenario holographic_scenario(int f, std::uint64_t seed);

}  // namespace fpl::mixing
