#include "doctest.h"

#include "fpl/linalg.hpp"
#include "fpl/mixing.hpp"

using namespace fpl;
using namespace fpl::mixing;

namespace {

CMatrix orthonormal(int d, int f, Rng& rng) {
  CMatrix q = Eigen::HouseholderQR<CMatrix>(complex_gaussian(d, f, rng)).householderQ();
  return q.leftCols(f);
}

// states on `sites` sites with two components, first half region 0
MixedSystem two_regions(int sites, int f, Rng& rng) {
  MixedSystem s;
  s.components = 2;
  s.states = orthonormal(2 * sites, f, rng);
  std::vector<int> labels(sites, 0);
  for (int x = sites / 2; x < sites; ++x) labels[x] = 1;
  s.partition = RegionPartition::from_labels(labels);
  return s;
}

SparseOp sparse(const CMatrix& m) { return m.sparseView(); }

}  // namespace

TEST_CASE("Haar samples are special unitary") {
  Rng rng(1);
  for (int f = 2; f <= 8; ++f)
    for (int k = 0; k < 20; ++k) {
      CMatrix u = haar_sample(f, rng);
      CHECK((u.adjoint() * u - CMatrix::Identity(f, f)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(u.determinant() - 1.0) <= 1e-10);
      CHECK(is_special_unitary(u));
    }
  CMatrix flip = CMatrix::Identity(3, 3);
  flip(0, 0) = -1.0;
  CHECK_FALSE(is_special_unitary(flip));
}

TEST_CASE("Haar moments") {
  auto est = mc_moments(6, {EntryProduct{{{0, 1}, {2, 3}}}, AbsSquare{1, 2}, EntryProduct{{{0, 0}}}}, 20000, 3);
  CHECK(est[0].within(0.0, 4.0));
  CHECK(est[1].within(1.0 / 6.0, 4.0));
  CHECK(est[2].within(0.0, 4.0));
  auto e8 = mc_moments(8, AbsSquare{0, 5}, 20000, 4);
  CHECK(e8.within(0.125, 4.0));
  // stream(seed, i) per sample: the estimate depends on the seed only
  auto again = mc_moments(8, AbsSquare{0, 5}, 20000, 4);
  CHECK(again.mean == e8.mean);
}

TEST_CASE("kernel ratio falls like f^{-1/2}") {
  auto small = mc_moments(16, KernelRatio{}, 1000, 5);
  auto large = mc_moments(64, KernelRatio{}, 1000, 6);
  double q = large.mean.real() / small.mean.real();
  CHECK(q >= 0.4);
  CHECK(q <= 0.6);
}

TEST_CASE("region restriction and decoherence") {
  Rng rng(7);
  auto sys = two_regions(4, 3, rng);
  CHECK((region_restriction(sys, 0) + region_restriction(sys, 1) - sys.states).norm() < 1e-15);

  SUBCASE("single region gives the global Hartree-Fock state") {
    MixedSystem one = sys;
    one.partition = RegionPartition::from_labels(std::vector<int>(4, 0));
    auto w = subsystem_wavefunctions(one);
    REQUIRE(w.size() == 1);
    CHECK(std::sqrt((w[0] - fock::wedge(sys.states)).norm2()) < 1e-14);
  }
  SUBCASE("dependent restrictions give a zero wave function") {
    MixedSystem dep = sys;
    dep.states.col(1) = dep.states.col(0);
    auto w = subsystem_wavefunctions(dep);
    CHECK(w[0].norm2() < 1e-28);
    CHECK(w[1].norm2() < 1e-28);
  }
  SUBCASE("identity decoherence leaves the kernel unchanged") {
    MixedSystem id = sys;
    id.decoherence = {CMatrix::Identity(3, 3), CMatrix::Identity(3, 3)};
    CHECK((cross_kernel(id, 0, 3) - cross_kernel(sys, 0, 3)).norm() < 1e-15);
  }
  SUBCASE("a common unitary drops out") {
    MixedSystem same = sys;
    CMatrix u = haar_sample(3, rng);
    same.decoherence = {u, u};
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) CHECK((cross_kernel(same, x, y) - cross_kernel(sys, x, y)).norm() < 1e-12);
  }
  SUBCASE("intra-region kernel is invariant") {
    MixedSystem mixed = sys;
    mixed.decoherence = {haar_sample(3, rng), haar_sample(3, rng)};
    CHECK((cross_kernel(mixed, 0, 1) - cross_kernel(sys, 0, 1)).norm() < 1e-12);
    CHECK((cross_kernel(mixed, 2, 3) - cross_kernel(sys, 2, 3)).norm() < 1e-12);
  }
  SUBCASE("diagonal phases between regions") {
    MixedSystem ph = sys;
    RVector phi(3);
    phi << 0.4, -1.1, 0.7;
    CMatrix d = CMatrix::Zero(3, 3);
    for (int j = 0; j < 3; ++j) d(j, j) = std::polar(1.0, phi(j));
    ph.decoherence = {CMatrix::Identity(3, 3), d};
    // psi~_j = e^{i phi_j} psi_j in region 1
    CMatrix expect = CMatrix::Zero(2, 2);
    for (int j = 0; j < 3; ++j)
      expect -= sys.states.block(0, j, 2, 1) * std::polar(1.0, -phi(j)) * sys.states.block(2 * 3, j, 2, 1).adjoint();
    CHECK((cross_kernel(ph, 0, 3) - expect).norm() < 1e-14);
  }
  SUBCASE("decoherence must be special unitary") {
    MixedSystem bad = sys;
    CMatrix flip = CMatrix::Identity(3, 3);
    flip(0, 0) = -1.0;
    bad.decoherence = {flip, flip};
    try {
      bad.validate();
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NotSpecialUnitary);
    }
  }
}

TEST_CASE("determinant coefficient") {
  SUBCASE("n = 0 is det(1 + U)") {
    Rng rng(8);
    CMatrix u = haar_sample(4, rng);
    CHECK(std::abs(det_coefficient(u, 0, {}) - (CMatrix::Identity(4, 4) + u).determinant()) < 1e-12);
  }
  SUBCASE("Haar mean for n = 0 is 2") {
    for (int f : {4, 8}) {
      auto m = det_moments(f, 0, {}, {}, 20000, 9);
      CHECK(m.first.within(2.0, 4.0));
    }
  }
  SUBCASE("sea identification agrees with the determinant formula") {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      int f = 3 + trial % 4;
      int n = trial % (f + 1);
      std::vector<int> i1;
      for (int k = 0; k < n; ++k)
        if (rng() % 2) i1.push_back(k);
      CMatrix u = haar_sample(f, rng);
      CHECK(std::abs(identified_coefficient(u, n, i1) - det_coefficient(u, n, i1)) < 1e-12);
    }
  }
}

TEST_CASE("weighted measures") {
  for (auto kind : {MeasureKind::TraceWeighted, MeasureKind::DetWeighted}) {
    auto m = det_moments(4, 1, {0}, {kind, 1.0}, 20000, 11);
    CHECK(m.acceptance > 0.05);
    CHECK(std::isfinite(m.first.mean.real()));
  }
}

TEST_CASE("superposition extraction") {
  Rng rng(12);
  const int f = 4;
  CMatrix u = haar_sample(f, rng);
  TermSelector pure1;
  CHECK(std::abs(superposition_extraction(u, pure1, f) - 1.0) < 1e-14);
  TermSelector pure2{{0, 1, 2, 3}, {0, 1, 2, 3}};
  CHECK(std::abs(superposition_extraction(u, pure2, f) - 1.0) < 1e-12);

  // against the amplitude of the full expanded wedge in the abstract basis
  CMatrix frame = CMatrix::Zero(2 * f, f);
  for (int j = 0; j < f; ++j) {
    frame(j, j) = 1.0;
    for (int k = 0; k < f; ++k) frame(f + k, j) = u(j, k);
  }
  auto full = fock::wedge(frame);
  for (const auto& t : std::vector<TermSelector>{{{0}, {2}}, {{1, 3}, {0, 2}}, {{2}, {2}}, {{0, 1, 2}, {1, 2, 3}}}) {
    std::vector<int> seq;
    std::vector<char> in2(f, 0);
    for (int s : t.region2_slots) in2[s] = 1;
    for (int j = 0; j < f; ++j)
      if (!in2[j]) seq.push_back(j);
    for (int k : t.region2_labels) seq.push_back(f + k);
    std::vector<int> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    int inv = 0;
    for (std::size_t a = 0; a < seq.size(); ++a)
      for (std::size_t b = a + 1; b < seq.size(); ++b) inv += seq[a] > seq[b];
    Complex oracle = (inv % 2 ? -1.0 : 1.0) * full.amplitude(sorted);
    CHECK(std::abs(superposition_extraction(u, t, f) - oracle) < 1e-12);
  }

  auto mean = mixed_term_mean(6, {{0}, {3}}, 6, 5000, 13);
  CHECK(mean.within(0.0, 4.0));
}

TEST_CASE("effective Fock space") {
  const int d = 6;
  Rng rng(14);
  CMatrix a = CMatrix::Zero(d, 1), b = CMatrix::Zero(d, 1);
  a(0, 0) = 1.0;
  b(4, 0) = 2.0;
  auto g = MeasurementGram::identity(d);
  auto disjoint = family_gram({WedgeSum::single(a), WedgeSum::single(b)}, g);
  CHECK(std::abs(disjoint(0, 1)) == 0.0);
  CHECK(effective_space(disjoint).dim() == 2);

  CMatrix v = complex_gaussian(d, 2, rng);
  auto e = effective_space({WedgeSum::single(v), WedgeSum::single(v, -1.0)}, g);
  CHECK(e.dim() == 1);
  CVector c(2);
  c << 1.0, 1.0;
  CHECK(e.project(c).norm() < 1e-12);

  CHECK_THROWS_AS(effective_space(CMatrix(CMatrix::Zero(2, 2))), Error);

  auto s = MeasurementGram::shifted(16, 2, 3);
  CHECK(s.min_eigenvalue() >= -1e-12);
}

TEST_CASE("rule B on a single region is the Fock expectation") {
  Rng rng(15);
  const int d = 6, f = 2;
  CMatrix q = orthonormal(d, f, rng);
  CMatrix o = random_hermitian(d, rng);
  auto r = expectation_rule_B({WedgeSum::single(q)}, FockObservable::lifted(sparse(o)), MeasurementGram::identity(d));
  CHECK(std::abs(r.value - (q * q.adjoint() * o).trace()) < 1e-12);

  CMatrix o2 = random_hermitian(d, rng);
  auto w = expectation_rule_B({WedgeSum::single(q)}, FockObservable::wick(sparse(o), sparse(o2)),
                              MeasurementGram::identity(d));
  CMatrix p = q * q.adjoint();
  CHECK(std::abs(w.value - fock::wick_expectation(p, o, o2)) < 1e-12);

  CHECK_THROWS_AS(expectation_rule_B({WedgeSum::single(q, 1.0), WedgeSum::single(q, -1.0)}, FockObservable::identity(),
                                     MeasurementGram::identity(d)),
                  Error);
}

TEST_CASE("collapse") {
  CMatrix o = CMatrix::Zero(2, 2);
  o(1, 1) = 1.0;
  CVector e0 = CVector::Unit(2, 0);
  auto c = collapse_rule_D(e0, o, 0);
  CHECK(c.probability == doctest::Approx(1.0));
  CHECK(std::abs(std::abs(c.state.dot(e0)) - 1.0) < 1e-14);

  CVector half(2);
  half << 1.0, Complex(0, 1.0);
  half /= std::sqrt(2.0);
  Rng rng(16);
  auto first = collapse_rule_D(half, o, std::nullopt, &rng);
  for (int k = 0; k < 20; ++k) CHECK(collapse_rule_D(first.state, o, std::nullopt, &rng).eigenvalue == first.eigenvalue);

  int ones = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) ones += collapse_rule_D(half, o, std::nullopt, &rng).eigenspace;
  CHECK(std::abs(ones / double(draws) - 0.5) <= 0.02);

  CHECK(eigenspace_count(CMatrix::Identity(3, 3)) == 1);
}

TEST_CASE("layered singlet at reduced size") {
  SingletConfig cfg;
  cfg.grid = 1024;
  cfg.bump_width = 128;
  double prev = 1e9;
  for (int eps : {32, 16, 8}) {
    cfg.epsilon = eps;
    auto r = singlet_experiment(cfg, 1);
    CHECK(r.effective_dim == 2);
    CHECK(r.max_error <= prev);
    prev = r.max_error;
    if (eps == 8) {
      CHECK(r.max_error <= 0.05);
      CHECK(r.fidelity >= 0.99);
    }
  }
  cfg.alice_center = cfg.bob_center = 512;
  try {
    singlet_experiment(cfg, 1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OverlappingSupports);
  }
}

TEST_CASE("local mixing kernel") {
  Rng rng(17);
  auto sys = two_regions(4, 3, rng);
  std::vector<CMatrix> id(4, CMatrix::Identity(3, 3));
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) {
      CHECK((local_mixing_kernel(sys.states, 2, id, x, y) - cross_kernel(sys, x, y)).norm() < 1e-15);
      CHECK(coherence_classify(sys.states, 2, id, x, y).relation == Coherence::Coherent);
    }

  CMatrix u0 = haar_sample(3, rng), u1 = haar_sample(3, rng);
  MixedSystem mixed = sys;
  mixed.decoherence = {u0, u1};
  std::vector<CMatrix> piecewise = {u0.transpose(), u0.transpose(), u1.transpose(), u1.transpose()};
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      CHECK((local_mixing_kernel(sys.states, 2, piecewise, x, y) - cross_kernel(mixed, x, y)).norm() < 1e-12);

  std::vector<CMatrix> bad = id;
  bad[1](0, 0) = -1.0;
  try {
    local_mixing_kernel(sys.states, 2, bad, 0, 1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotSpecialUnitary);
  }
}

TEST_CASE("coherence is not transitive") {
  auto s = holographic_scenario(64, 3);
  auto xy = coherence_classify(s.states, s.components, s.u_sites, s.x, s.y);
  auto yz = coherence_classify(s.states, s.components, s.u_sites, s.y, s.z);
  auto xz = coherence_classify(s.states, s.components, s.u_sites, s.x, s.z);
  CHECK(xy.relation == Coherence::Coherent);
  CHECK(yz.relation == Coherence::Coherent);
  CHECK(xz.relation == Coherence::Decoherent);
}
