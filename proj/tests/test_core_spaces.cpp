#include "doctest.h"

#include "fpl/core_spaces.hpp"
#include "fpl/linalg.hpp"

using namespace fpl;
using namespace fpl::core;

namespace {

IndefiniteSpace signature(int p, int q) {
  RVector d(p + q);
  d.head(p).setOnes();
  d.tail(q).setConstant(-1.0);
  return IndefiniteSpace(d.cast<Complex>().asDiagonal());
}

CVector unit(int n, int i) {
  CVector v = CVector::Zero(n);
  v(i) = 1.0;
  return v;
}

// unitary for <.|.> that commutes with every E_x: U(2) (+) U(2) per point
CMatrix spin_unitary(int m, Rng& rng) {
  CMatrix u = CMatrix::Zero(4 * m, 4 * m);
  for (int x = 0; x < m; ++x)
    for (int b = 0; b < 2; ++b) {
      CMatrix q = Eigen::HouseholderQR<CMatrix>(complex_gaussian(2, 2, rng)).householderQ();
      u.block(4 * x + 2 * b, 4 * x + 2 * b, 2, 2) = q;
    }
  return u;
}

}  // namespace

TEST_CASE("indefinite space signature and adjoint") {
  auto s = signature(2, 2);
  CHECK(s.positive() == 2);
  CHECK(s.negative() == 2);
  Rng rng(5);
  CMatrix a = complex_gaussian(4, 4, rng);
  CVector u = complex_gaussian(4, 1, rng), v = complex_gaussian(4, 1, rng);
  CHECK(std::abs(s.inner(u, a * v) - s.inner(s.adjoint(a) * u, v)) < 1e-12);
}

TEST_CASE("frame_to_projector on a single negative basis vector") {
  auto st = DiscreteSpacetime::standard(1);
  CMatrix e3 = unit(4, 2);
  auto p = frame_to_projector(st.space, e3);
  CHECK(p.rank() == 1);
  CHECK(std::abs(st.space.inner(p.frame.col(0), p.frame.col(0)) + 1.0) < 1e-14);
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(2, 2) = 1.0;
  CHECK((p.matrix - expected).norm() < 1e-14);
}

TEST_CASE("frame_to_projector errors") {
  auto st = DiscreteSpacetime::standard(1);
  CMatrix dup(4, 2);
  dup << unit(4, 2), unit(4, 2);
  CHECK_THROWS_AS(frame_to_projector(st.space, dup), Error);
  try {
    frame_to_projector(st.space, dup);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RankDeficient);
  }
  try {
    frame_to_projector(st.space, CMatrix(unit(4, 0)));
    FAIL("positive vector accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotNegativeDefinite);
  }
}

TEST_CASE("random negative 2-frame in signature (4,4) gives an idempotent") {
  auto s = signature(4, 4);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    CMatrix v = complex_gaussian(8, 2, rng);
    v.topRows(4) *= 0.2;
    auto p = frame_to_projector(s, v);
    CHECK((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff() <= 1e-10);
    // symmetric with respect to <.|.>
    CHECK((s.adjoint(p.matrix) - p.matrix).cwiseAbs().maxCoeff() <= 1e-10);
    CMatrix g = s.gram_of(p.frame);
    CHECK((g + CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("discrete kernel localization") {
  auto st = DiscreteSpacetime::standard(3);
  CMatrix zero = CMatrix::Zero(12, 12);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) CHECK(discrete_kernel(zero, st, x, y).norm() == 0.0);

  auto p = frame_to_projector(st.space, CMatrix(unit(12, 4 * 1 + 3)));
  for (int y = 0; y < 3; ++y) {
    if (y == 1) CHECK(discrete_kernel(p, st, 1, 1).norm() > 0.5);
    else {
      CHECK(discrete_kernel(p, st, 1, y).norm() == 0.0);
      CHECK(discrete_kernel(p, st, y, 1).norm() == 0.0);
    }
  }
}

TEST_CASE("closed chain of the zero projector") {
  auto st = DiscreteSpacetime::standard(2);
  auto c = closed_chain(CMatrix(CMatrix::Zero(8, 8)), st, 0, 1);
  CHECK(c.matrix.norm() == 0.0);
  for (auto z : c.eigenvalues) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("closed chain spectra of A_xy and A_yx coincide") {
  auto st = DiscreteSpacetime::standard(3);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = frame_to_projector(st.space, random_negative_frame(st, 1 + trial % 3, rng));
    auto a = closed_chain(p, st, 0, 2), b = closed_chain(p, st, 2, 0);
    // equal spectra means equal power traces
    CMatrix ap = CMatrix::Identity(4, 4), bp = ap;
    for (int k = 1; k <= 4; ++k) {
      ap *= a.matrix;
      bp *= b.matrix;
      CHECK(std::abs(ap.trace() - bp.trace()) <= 1e-9 * std::max(1.0, std::abs(ap.trace())));
    }
  }
}

TEST_CASE("spectral weights") {
  std::array<Complex, 4> a{Complex(1), Complex(-2), Complex(3), Complex(-4)};
  CHECK(spectral_weight(a) == doctest::Approx(10.0));
  std::array<Complex, 4> b{Complex(0, 1), Complex(0, -1), Complex(1), Complex(-1)};
  CHECK(spectral_weight(b) == doctest::Approx(4.0));
  CHECK(spectral_weight_of_square(b) == doctest::Approx(4.0));
}

TEST_CASE("action and constraint") {
  auto st1 = DiscreteSpacetime::standard(1);
  auto zero = action_and_constraint(CMatrix(CMatrix::Zero(4, 4)), st1);
  CHECK(zero.action == 0.0);
  CHECK(zero.constraint == 0.0);

  CMatrix fr(4, 2);
  fr << unit(4, 2), unit(4, 3);
  auto p = frame_to_projector(st1.space, fr);
  auto v = action_and_constraint(p.matrix, st1);
  CHECK(v.action == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(v.constraint == doctest::Approx(4.0).epsilon(1e-12));

  auto st = DiscreteSpacetime::standard(3);
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    auto q = frame_to_projector(st.space, random_negative_frame(st, 2, rng));
    CMatrix u = spin_unitary(3, rng);
    CMatrix conj = u * q.matrix * u.adjoint();
    auto before = action_and_constraint(q.matrix, st), after = action_and_constraint(conj, st);
    CHECK(std::abs(before.action - after.action) <= 1e-8 * before.action);
    CHECK(std::abs(before.constraint - after.constraint) <= 1e-8 * before.constraint);
  }
}

TEST_CASE("causal classification") {
  CHECK(classify_causal({Complex(1), Complex(2), Complex(3), Complex(4)}) == Causal::Timelike);
  CHECK(classify_causal({Complex(1, 1), Complex(1, -1), Complex(-1, 1), Complex(-1, -1)}) == Causal::Spacelike);
  CHECK(classify_causal({Complex(1, 1), Complex(1, -1), Complex(2), Complex(3)}) == Causal::Lightlike);
  // conjugate pairs of different modulus are lightlike
  CHECK(classify_causal({Complex(1, 1), Complex(1, -1), Complex(2, 2), Complex(2, -2)}) == Causal::Lightlike);
}

TEST_CASE("match_constraint hits the target") {
  auto st = DiscreteSpacetime::standard(2);
  Rng rng(9);
  CMatrix fr = random_negative_frame(st, 2, rng);
  REQUIRE(match_constraint(st, fr, 8.0));
  auto v = action_and_constraint(frame_to_projector(st.space, fr).matrix, st);
  CHECK(std::abs(v.constraint - 8.0) <= 1e-8);
}

TEST_CASE("minimizer") {
  SUBCASE("f = 0") {
    auto st = DiscreteSpacetime::standard(2);
    auto r = minimize_action(st, 0, 0.0);
    CHECK(r.projector.matrix.norm() == 0.0);
    CHECK(r.action == 0.0);
  }
  SUBCASE("rank above the negative index") {
    auto st = DiscreteSpacetime::standard(1);
    try {
      minimize_action(st, 3, 1.0);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InfeasibleRank);
    }
  }
  SUBCASE("m = 2, f = 2 beats random search and is reproducible") {
    auto st = DiscreteSpacetime::standard(2);
    MinimizeOptions o;
    o.seed = 4;
    o.restarts = 3;
    o.max_iterations = 150;
    auto a = minimize_action(st, 2, 8.0, o);
    auto b = minimize_action(st, 2, 8.0, o);
    CHECK(a.constraint_met);
    CHECK(a.action == b.action);
    CHECK(a.projector.matrix == b.projector.matrix);
    CHECK(a.action <= a.initial_action);
    double best = 1e300;
    for (int s = 0; s < 50; ++s) {
      Rng rng = stream(99, s);
      CMatrix fr = random_negative_frame(st, 2, rng);
      if (!match_constraint(st, fr, 8.0)) continue;
      best = std::min(best, action_and_constraint(frame_to_projector(st.space, fr).matrix, st).action);
    }
    CHECK(a.action <= best);
    // the result stays a fermionic projector
    CHECK((a.projector.matrix * a.projector.matrix - a.projector.matrix).cwiseAbs().maxCoeff() < 1e-9);
  }
}
