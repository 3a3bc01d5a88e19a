#include <gtest/gtest.h>

#include <cmath>

#include "aecnr/linalg.hpp"
#include "aecnr/rng.hpp"

using namespace aecnr;

namespace {

HermitianMatrix random_pd(Rng& g, std::size_t n, std::size_t extra = 2) {
  ComplexMatrix x(n, n + extra);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n + extra; ++j) x(i, j) = cplx(g.normal(), g.normal());
  return HermitianMatrix(x * x.adjoint());
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).frobenius_norm() / b.frobenius_norm();
}

}  // namespace

TEST(HermitianMatrix, RejectsAsymmetricInput) {
  EXPECT_THROW(HermitianMatrix({{1.0, 2.0}, {3.0, 1.0}}), NotHermitian);
  EXPECT_THROW(HermitianMatrix(ComplexMatrix(2, 3)), LinalgError);
}

TEST(HermitianMatrix, RejectsNonFinite) {
  EXPECT_THROW(HermitianMatrix({{std::nan(""), 0.0}, {0.0, 1.0}}), LinalgError);
}

TEST(HermitianMatrix, SymmetrisesWithinTolerance) {
  const HermitianMatrix h({{2.0, cplx(1.0, 1e-14)}, {cplx(1.0, 0.0), 2.0}});
  EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));
}

TEST(Cholesky, IdentityAndDiagonal) {
  EXPECT_EQ(cholesky(HermitianMatrix::identity(3)).frobenius_norm(), std::sqrt(3.0));
  const double d[] = {4.0, 9.0};
  const ComplexMatrix l = cholesky(HermitianMatrix::diagonal(d));
  EXPECT_DOUBLE_EQ(l(0, 0).real(), 2.0);
  EXPECT_DOUBLE_EQ(l(1, 1).real(), 3.0);
  EXPECT_EQ(l(1, 0), cplx{});
}

TEST(Cholesky, ReconstructsRandomPd) {
  Rng g(3, 1);
  const HermitianMatrix h = random_pd(g, 4);
  const ComplexMatrix l = cholesky(h);
  EXPECT_LE(rel_diff(l * l.adjoint(), h.matrix()), 1e-12);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_EQ(l(i, j), cplx{});
}

TEST(Cholesky, ReportsPivotOfSingularMatrix) {
  const HermitianMatrix h({{1.0, 1.0}, {1.0, 1.0}});
  try {
    (void)cholesky(h);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot_index(), 1u);
  }
}

TEST(SolveGuarded, RegularizesOnlySingularInput) {
  bool flagged = true;
  const CVector b{1.0, 1.0};
  const double d[] = {2.0, 4.0};
  const CVector x = solve_guarded(HermitianMatrix::diagonal(d), b, &flagged);
  EXPECT_FALSE(flagged);
  EXPECT_DOUBLE_EQ(x[0].real(), 0.5);
  (void)solve_guarded(HermitianMatrix({{1.0, 1.0}, {1.0, 1.0}}), b, &flagged);
  EXPECT_TRUE(flagged);
}

TEST(SolveHermitian, TrivialAndResidual) {
  const CVector b{2.0, 4.0};
  EXPECT_EQ(solve_hermitian(HermitianMatrix::identity(2), b), b);
  const double d[] = {2.0, 4.0};
  const CVector x = solve_hermitian(HermitianMatrix::diagonal(d), b);
  EXPECT_DOUBLE_EQ(x[0].real(), 1.0);
  EXPECT_DOUBLE_EQ(x[1].real(), 1.0);

  Rng g(4, 2);
  const HermitianMatrix h = random_pd(g, 5);
  CVector rhs(5);
  for (auto& v : rhs) v = cplx(g.normal(), g.normal());
  const CVector y = solve_hermitian(h, rhs);
  const CVector r = axpy(cplx{-1.0}, h.matrix() * y, rhs);
  EXPECT_LE(norm2(r), 1e-12 * norm2(rhs));
}

TEST(HermEig, DiagonalIsSortedDescending) {
  const double d[] = {1.0, 5.0};
  const HermitianEigen e = herm_eig(HermitianMatrix::diagonal(d));
  EXPECT_DOUBLE_EQ(e.values[0], 5.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(0, 1)), 1.0);
}

TEST(HermEig, RealSymmetricByHand) {
  // Characteristic polynomial (2 - x)^2 - 1 has roots 3 and 1.
  const HermitianEigen e = herm_eig(HermitianMatrix({{2.0, 1.0}, {1.0, 2.0}}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
}

TEST(HermEig, ScalingSharesVectors) {
  Rng g(5, 3);
  const HermitianMatrix h = random_pd(g, 4);
  const HermitianEigen a = herm_eig(h), b = herm_eig(2.5 * h);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(b.values[k], 2.5 * a.values[k], 1e-12 * b.values[0]);
    EXPECT_NEAR(std::abs(inner(a.vectors.col(k), b.vectors.col(k))), 1.0, 1e-10);
  }
}

TEST(HermEig, RecoversConstructedSpectrum) {
  Rng g(6, 4);
  // Unitary from the eigenvectors of an unrelated random matrix.
  const ComplexMatrix u = herm_eig(random_pd(g, 4)).vectors;
  const double d[] = {7.0, 3.0, 0.5, 0.01};
  const HermitianMatrix h = congruence(u.adjoint(), ComplexMatrix::diagonal(d));
  const HermitianEigen e = herm_eig(h);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(e.values[k], d[k], 1e-12 * d[0]);
}

TEST(Gevd, DiagonalPencil) {
  const double a[] = {8.0, 1.0}, b[] = {2.0, 1.0};
  const GevdResult g = gevd(HermitianMatrix::diagonal(a), HermitianMatrix::diagonal(b));
  EXPECT_NEAR(g.ratio(0), 4.0, 1e-14);
  EXPECT_NEAR(g.ratio(1), 1.0, 1e-14);
}

TEST(Gevd, IdentitySecondMatrixIsHermEig) {
  Rng g(7, 5);
  const HermitianMatrix a = random_pd(g, 4);
  const GevdResult r = gevd(a, HermitianMatrix::identity(4));
  const HermitianEigen e = herm_eig(a);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.ratio(k), e.values[k], 1e-12 * e.values[0]);
}

TEST(Gevd, JointDiagonalisationReconstructsBoth) {
  Rng g(8, 6);
  for (int t = 0; t < 20; ++t) {
    const HermitianMatrix a = random_pd(g, 4), b = random_pd(g, 4);
    const GevdResult r = gevd(a, b);
    const HermitianMatrix ra = reconstruct(r.q, r.lambda_a), rb = reconstruct(r.q, r.lambda_b);
    EXPECT_LE((ra.matrix() - a.matrix()).max_abs(), 1e-10 * a.frobenius_norm());
    EXPECT_LE((rb.matrix() - b.matrix()).max_abs(), 1e-10 * b.frobenius_norm());
    for (std::size_t k = 0; k + 1 < 4; ++k) EXPECT_GE(r.ratio(k), r.ratio(k + 1));
  }
}

TEST(Gevd, RatiosInvariantUnderCongruence) {
  Rng g(9, 7);
  const HermitianMatrix a = random_pd(g, 4), b = random_pd(g, 4);
  ComplexMatrix t(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) t(i, j) = cplx(g.normal(), g.normal());
  const GevdResult r1 = gevd(a, b), r2 = gevd(congruence(t, a.matrix()), congruence(t, b.matrix()));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r2.ratio(k) / r1.ratio(k), 1.0, 1e-8);
}

TEST(Gevd, RejectsIndefiniteSecondMatrix) {
  EXPECT_THROW(gevd(HermitianMatrix::identity(2), HermitianMatrix({{1.0, 0.0}, {0.0, -1.0}})),
               NotPositiveDefinite);
}

TEST(RatioSort, SortedReversedAndTies) {
  GevdResult g{ComplexMatrix::identity(2), {4.0, 1.0}, {1.0, 1.0}};
  GevdResult s = ratio_sort(g);
  EXPECT_EQ(s.lambda_a, g.lambda_a);
  EXPECT_EQ(s.q(0, 0), cplx{1.0});

  g.lambda_a = {1.0, 4.0};
  s = ratio_sort(g);
  EXPECT_EQ(s.lambda_a, (RVector{4.0, 1.0}));
  EXPECT_EQ(s.q(1, 0), cplx{1.0});

  g.lambda_a = {2.0, 2.0};
  g.q(0, 1) = 0.5;
  s = ratio_sort(g);
  EXPECT_EQ(s.q(0, 1), cplx{0.5});  // original order kept
}

TEST(Rng, DeterministicStreams) {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
}
