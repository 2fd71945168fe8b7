#include "doctest.h"

#include "fpl/linalg.hpp"
#include "fpl/random.hpp"
#include "fpl/subsystem.hpp"

using namespace fpl;
using namespace fpl::subsystem;

namespace {

CMatrix orthonormal(int d, int f, Rng& rng) {
  CMatrix q = Eigen::HouseholderQR<CMatrix>(complex_gaussian(d, f, rng)).householderQ();
  return q.leftCols(f);
}

fock::FockVector singlet(int d) {
  auto psi = fock::basis_state(d, {0, 3}) - fock::basis_state(d, {1, 2});
  psi *= 1.0 / std::sqrt(2.0);
  return psi;
}

}  // namespace

TEST_CASE("splits") {
  auto s = SubsystemSplit::coordinate(5, {1, 3});
  CHECK(s.inner_dim() == 2);
  CHECK(s.outer_dim() == 3);
  CHECK((s.inner + s.outer - CMatrix::Identity(5, 5)).norm() < 1e-15);
  CHECK_THROWS_AS(SubsystemSplit::from_projector(0.5 * CMatrix::Identity(3, 3)), Error);
}

TEST_CASE("outer Gram") {
  auto split = SubsystemSplit::coordinate(6, {0, 1, 2});
  Rng rng(1);
  CMatrix inside = CMatrix::Zero(6, 2);
  inside.topRows(3) = orthonormal(3, 2, rng);
  CHECK(outer_gram(inside, split).norm() == 0.0);

  CMatrix outside = CMatrix::Zero(6, 2);
  outside.bottomRows(3) = orthonormal(3, 2, rng);
  CHECK((outer_gram(outside, split) - CMatrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("partial trace and minors agree") {
  for (int s = 0; s < 10; ++s) {
    Rng rng = stream(21, s);
    int f = 1 + s % 4;
    int d = f + 2 + s % 3;
    int inner = 1 + s % (d - 1);
    CMatrix q = orthonormal(d, d, rng);
    auto split = SubsystemSplit::from_projector(q.leftCols(inner) * q.leftCols(inner).adjoint());
    CMatrix states = orthonormal(d, f, rng);
    auto a = density_partial_trace(states, split);
    auto b = density_minors(states, split);
    CHECK(a.distance(b) <= 1e-7);
    CHECK(std::abs(a.trace() - 1.0) < 1e-10);
  }
}

TEST_CASE("Hartree-Fock recovery") {
  const int d = 6, f = 3;
  Rng rng(2);
  CMatrix states = CMatrix::Zero(d, f);
  states.topRows(4) = orthonormal(4, f, rng);
  auto split = SubsystemSplit::coordinate(d, {0, 1, 2, 3});
  CVector psi = fock::wedge(states).to_dense();
  for (const auto& rho : {density_partial_trace(states, split), density_minors(states, split)}) {
    for (int g = 0; g < f; ++g) CHECK(rho.sectors[g].cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((rho.sectors[f] - psi * psi.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mixed-state example weights") {
  const double kap = 0.6, c = std::sqrt(1 - kap * kap);
  const int d = 6;
  CMatrix st = CMatrix::Zero(d, 3);
  st(0, 0) = 1.0;
  st(1, 1) = c;
  st(4, 1) = kap;
  st(2, 2) = c;
  st(5, 2) = kap;
  auto split = SubsystemSplit::coordinate(d, {0, 1, 2, 3});
  // weights on dyads of 1/g!-normalized wedges of the unit inner directions
  auto weight = [&](const FockDensityOperator& rho, std::vector<int> modes) {
    int g = static_cast<int>(modes.size());
    fock::SectorBasis b(d, g);
    CVector v = CVector::Zero(b.size());
    for (int i = 0; i < b.size(); ++i) v(i) = (b.mask(i) == fock::mask_of(modes)) ? 1.0 : 0.0;
    double norms = 1.0;
    for (int m : modes) norms *= (m == 0 ? 1.0 : c * c);
    return factorial(g) * v.dot(rho.sectors[g] * v).real() / norms;
  };
  for (const auto& rho : {density_partial_trace(st, split), density_minors(st, split)}) {
    CHECK(std::abs(weight(rho, {0}) - std::pow(kap, 4)) <= 1e-9);
    CHECK(std::abs(weight(rho, {0, 1}) - 2 * kap * kap) <= 1e-9);
    CHECK(std::abs(weight(rho, {0, 2}) - 2 * kap * kap) <= 1e-9);
    CHECK(std::abs(weight(rho, {0, 1, 2}) - 6.0) <= 1e-9);
  }
}

TEST_CASE("density expectation matches the Fock side") {
  Rng rng(3);
  const int d = 7, f = 3;
  auto split = SubsystemSplit::coordinate(d, {0, 1, 2, 3});
  CMatrix states = orthonormal(d, f, rng);
  auto rho = density_partial_trace(states, split);
  CMatrix o = split.inner * random_hermitian(d, rng) * split.inner;
  auto psi = fock::wedge(states);
  auto lifted = fock::lift_one_particle(o, f);
  Complex oracle = fock::fock_inner(psi, lifted.apply(psi)) / psi.norm2();
  CHECK(std::abs(rho.expectation(lifted) - oracle) < 1e-10);
}

TEST_CASE("minor identity") {
  Rng rng(4);
  // |I| = 1 is Cramer's rule
  CMatrix a = complex_gaussian(4, 4, rng) + 2.0 * CMatrix::Identity(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(minor_identity(a, {i}, {j}).residual <= 1e-12);
      CMatrix inv = a.inverse();
      auto ci = complement({j}, 4), cj = complement({i}, 4);
      Complex cramer = ((i + j) % 2 ? -1.0 : 1.0) * minor_det(a, ci, cj) / a.determinant();
      CHECK(std::abs(cramer - inv(i, j)) < 1e-12);
    }
  CHECK(minor_identity(CMatrix::Identity(5, 5), {0, 2}, {0, 2}).residual < 1e-15);
  CHECK(minor_identity(CMatrix::Identity(5, 5), {0, 2}, {1, 2}).residual < 1e-15);
  for (int s = 0; s < 20; ++s) {
    int n = 5 + s % 4;
    CMatrix m = complex_gaussian(n, n, rng) + 2.0 * CMatrix::Identity(n, n);
    int g = 1 + s % (n - 1);
    auto all = subsets(n, g);
    CHECK(minor_identity(m, all[rng() % all.size()], all[rng() % all.size()]).residual <= 1e-9);
  }
  CMatrix sing = CMatrix::Zero(3, 3);
  sing(0, 0) = 1.0;
  try {
    minor_identity(sing, {0}, {0});
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Singular);
  }
}

TEST_CASE("projector approximation") {
  SUBCASE("Hartree-Fock state") {
    Rng rng(5);
    auto split = SubsystemSplit::coordinate(6, {0, 1, 2, 3});
    CMatrix st = CMatrix::Zero(6, 2);
    st.topRows(4) = orthonormal(4, 2, rng);
    auto ap = approx_by_projector(fock::wedge(st), split);
    for (double r : ap.occupations) CHECK((std::abs(r) < 1e-12 || std::abs(r - 1.0) < 1e-12));
    CHECK(ap.frame.cols() == 2);
    CHECK((ap.projector - st * st.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((split.outer * ap.projector).norm() < 1e-10);
  }
  SUBCASE("singlet") {
    const int d = 8;
    auto psi = singlet(d);
    auto split = SubsystemSplit::coordinate(d, {0, 1, 2, 3});
    auto ap = approx_by_projector(psi, split);
    CMatrix up = CMatrix::Zero(d, d), down = up;
    up(0, 0) = 1.0;
    down(3, 3) = 1.0;
    CHECK(std::abs((ap.projector * up).trace() - 0.5) < 1e-10);
    CHECK(std::abs((ap.projector * down).trace() - 0.5) < 1e-10);
    Rng rng(6);
    for (int k = 0; k < 10; ++k) {
      CMatrix o = split.inner * random_hermitian(d, rng) * split.inner;
      auto lifted = fock::lift_one_particle(o, 2);
      Complex oracle = fock::fock_inner(psi, lifted.apply(psi));
      CHECK(std::abs((ap.projector * o).trace() - oracle) < 1e-10);
    }
  }
  SUBCASE("outer space too small") {
    auto split = SubsystemSplit::coordinate(6, {0, 1, 2, 3});
    try {
      approx_by_projector(singlet(6), split);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InsufficientOuterDim);
    }
  }
}

TEST_CASE("singlet no-go certificate") {
  const int d = 8;
  CMatrix up = CMatrix::Zero(d, d), down = up;
  up(0, 0) = 1.0;
  down(3, 3) = 1.0;
  auto ap = approx_by_projector(singlet(d), SubsystemSplit::coordinate(d, {0, 1, 2, 3}));
  auto cert = singlet_nogo_certificate(ap.projector, up, down);
  CHECK(cert.hs_identity_residual <= 1e-12);
  CHECK(cert.deviations[0] < 1e-10);
  CHECK(cert.deviations[1] < 1e-10);
  CHECK(cert.residual > 0.05);

  auto search = nogo_random_search(6, 4, 500, 7);
  CHECK(search.samples == 500);
  CHECK_FALSE(search.any_zero);
  CHECK(search.floor > 0.0);
  CHECK(search.max_hs_identity_residual <= 1e-12);
  CHECK(search.floor >= std::sqrt(1.25) - 1.0 - 1e-12);
}
