#include "helpers.hpp"

using namespace sepqp;
using namespace testutil;

namespace {

SeparableQcqp one_block(Matrix A, Vector b, double c,
                        ConstraintKind kind = ConstraintKind::Inequality) {
  BlockConstraint blk;
  blk.A = std::move(A);
  blk.b = std::move(b);
  blk.c = c;
  blk.kind = kind;
  const Index n = blk.dim();
  return SeparableQcqp::create(Matrix::Identity(n, n), Vector::Zero(n), 0.0, {blk});
}

}  // namespace

TEST_CASE("an identity block leaves the transform trivial", "[congruence]") {
  const SeparableQcqp q = one_block(Matrix::Identity(2, 2), Vector::Zero(2), -1.0);
  const CongruenceSystem sys = build_congruence(q);
  CHECK(sys.diag_case == DiagCase::Diagonalizable);
  CHECK(inf_norm(sys.P - Matrix::Identity(3, 3)) <= 1e-14);
  const ExtendedMatrices ext = assemble_extended(q);
  CHECK(inf_norm(sys.F[0] - ext.Abar[0]) <= 1e-14);
}

TEST_CASE("a scalar block with a shift produces the explicit transform", "[congruence]") {
  // 4x² + 4x − 3: scale 1/2, center −1/2, transformed matrix diag(1, −4).
  const SeparableQcqp q = one_block(mat({{4.0}}), vec({2.0}), -3.0);
  const CongruenceSystem sys = build_congruence(q);
  CHECK(sys.diag_case == DiagCase::Diagonalizable);
  CHECK(std::abs(sys.P(0, 0) - 0.5) <= 1e-14);
  CHECK(std::abs(sys.P(0, 1) - (-0.5)) <= 1e-14);
  CHECK(std::abs(sys.P(1, 1) - 1.0) <= 1e-14);
  const Matrix expected = mat({{1.0, 0.0}, {0.0, -4.0}});
  CHECK(inf_norm(sys.F[0] - expected) <= 1e-12);
}

TEST_CASE("a linear term outside the Hessian range flags residual coupling", "[congruence]") {
  const SeparableQcqp q = one_block(mat({{0.0}}), vec({1.0}), -1.0);
  const CongruenceSystem sys = build_congruence(q);
  CHECK(sys.diag_case == DiagCase::NotDiagonalizable);
  REQUIRE(sys.residual.size() == 1);
  CHECK(sys.residual[0] == 0);
}

TEST_CASE("the stored inverse really inverts the transform", "[congruence]") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = rng.uniform_int(1, 3);
    const int p = N + rng.uniform_int(0, 4);
    SeparableQcqp q = random_convex_blocks(rng, p, N, true, false);
    if (trial % 3 == 0) {
      // Singular block with an out-of-range linear term.
      q.blocks[0].A.setZero();
      q.blocks[0].b.setConstant(1.0);
    }
    const CongruenceSystem sys = build_congruence(q);
    const Index n = sys.P.rows();
    CHECK(inf_norm(sys.P * sys.P_inv - Matrix::Identity(n, n)) <= 1e-9);
    CHECK(inf_norm(sys.P_inv * sys.P - Matrix::Identity(n, n)) <= 1e-9);

    const Vector x = rng.normal_vector(q.dim());
    const Vector back = to_original(sys, to_transformed(sys, x));
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("in-range blocks diagonalize with unit-magnitude diagonals", "[congruence]") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = rng.uniform_int(1, 3);
    const int p = N + rng.uniform_int(0, 4);
    const SeparableQcqp q = random_convex_blocks(rng, p, N, true, false);
    const ExtendedMatrices ext = assemble_extended(q);
    const CongruenceSystem sys = build_congruence(q);
    REQUIRE(sys.diag_case == DiagCase::Diagonalizable);
    const Index pp = q.dim();
    for (std::size_t i = 0; i < sys.F.size(); ++i) {
      const double scale = 1.0 + inf_norm(ext.Abar[i]);
      Matrix off = sys.F[i];
      for (Index j = 0; j < pp; ++j) {
        const double dj = off(j, j);
        const double snapped = std::round(dj);
        CHECK(std::abs(dj - snapped) <= 1e-9 * scale);
        CHECK(std::abs(snapped) <= 1.0);
        off(j, j) = 0.0;
      }
      off(pp, pp) = 0.0;
      CHECK(inf_norm(off) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("eigenvalue sign counts follow the explicit examples", "[congruence]") {
  Vector d(3);
  d << 1.0, -1.0, 0.0;
  const Inertia a = inertia(Matrix(d.asDiagonal()));
  CHECK(a.positive == 1);
  CHECK(a.negative == 1);
  CHECK(a.zero == 1);
  const Inertia b = inertia(Matrix::Identity(3, 3));
  CHECK(b.positive == 3);
  CHECK(b.negative == 0);
  CHECK(b.zero == 0);
  CHECK_THROWS_AS(inertia(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("the transform preserves eigenvalue sign counts", "[congruence]") {
  Rng rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = rng.uniform_int(1, 3);
    const int p = N + rng.uniform_int(0, 3);
    const SeparableQcqp q = random_convex_blocks(rng, p, N, true, trial % 2 == 0);
    const ExtendedMatrices ext = assemble_extended(q);
    const CongruenceSystem sys = build_congruence(q);
    // Scale-aware zero band: congruent matrices keep the counts, but the
    // transform can rescale near-zero eigenvalues across the band edge.
    const double tau = 1e-9 * (1.0 + inf_norm(ext.Abar0));
    CHECK(inertia(ext.Abar0, tau) == inertia(sys.F0, tau));
    for (std::size_t i = 0; i < sys.F.size(); ++i) {
      const double ti = 1e-9 * (1.0 + inf_norm(ext.Abar[i]));
      CHECK(inertia(ext.Abar[i], ti) == inertia(sys.F[i], ti));
    }
  }
}

TEST_CASE("residual rows carry only a border entry", "[congruence]") {
  Rng rng(109);
  for (int trial = 0; trial < 10; ++trial) {
    const int N = rng.uniform_int(2, 3);
    const int p = N + rng.uniform_int(0, 3);
    SeparableQcqp q = random_convex_blocks(rng, p, N, false, true);
    q.blocks[0].A.setZero();
    for (Index j = 0; j < q.blocks[0].b.size(); ++j)
      q.blocks[0].b(j) = rng.uniform(0.5, 1.5);
    const CongruenceSystem sys = build_congruence(q);
    REQUIRE(sys.diag_case == DiagCase::NotDiagonalizable);
    REQUIRE_FALSE(sys.residual.empty());
    const Index pp = q.dim();
    for (const Index m : sys.residual) {
      CHECK(m < q.block_dim(0));  // the singular block owns the residual rows
      const Matrix& Fi = sys.F[0];
      CHECK(std::abs(Fi(m, m)) <= 1e-9 * (1.0 + inf_norm(Fi)));
      CHECK(std::abs(Fi(m, pp)) > 0.0);
      for (Index j = 0; j < pp; ++j)
        if (j != m) CHECK(std::abs(Fi(m, j)) <= 1e-9 * (1.0 + inf_norm(Fi)));
    }
  }
}

TEST_CASE("the level shift moves only the corner entry", "[congruence]") {
  Rng rng(113);
  const SeparableQcqp q = random_convex_blocks(rng, 4, 2, true, true);
  const CongruenceSystem base = build_congruence(q, 0.0);
  const double alpha = 2.5;
  const CongruenceSystem shifted = build_congruence(q, alpha);
  const Index p = q.dim();
  Matrix diff = base.F0 - shifted.F0;
  CHECK(std::abs(diff(p, p) - alpha) <= 1e-12 * (1.0 + std::abs(alpha)));
  diff(p, p) = 0.0;
  CHECK(inf_norm(diff) <= 1e-12 * (1.0 + inf_norm(base.F0)));
  CHECK_THROWS_AS(build_congruence(q, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("the corner marker is invariant under the transform", "[congruence]") {
  Rng rng(127);
  const SeparableQcqp q = random_convex_blocks(rng, 5, 3, true, false);
  const ExtendedMatrices ext = assemble_extended(q);
  const CongruenceSystem sys = build_congruence(q, ext, 0.0);
  CHECK(inf_norm(sys.P.transpose() * ext.E * sys.P - ext.E) <= 1e-12);
}
