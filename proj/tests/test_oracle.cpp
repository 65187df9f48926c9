#include "helpers.hpp"

using namespace sepqp;
using namespace testutil;

TEST_CASE("the grid oracle finds an interior minimum to grid accuracy", "[oracle]") {
  // f = x² over x² <= 1: minimum 0 at the origin.
  const SeparableQcqp q = scalar_problem(1.0);
  const GridResult res = grid_global_min(q, default_grid(q, 33, 6));
  REQUIRE(res.found);
  CHECK(std::abs(res.value) <= 1e-6);
  CHECK(std::abs(res.x(0)) <= 1e-3);
  CHECK(res.worst_violation <= 1e-8);
  CHECK(res.evaluated > 0);
  CHECK(res.pitch > 0.0);
  CHECK(res.error_bound > 0.0);
}

TEST_CASE("the grid oracle tracks a boundary minimum", "[oracle]") {
  // f = −x² over x² <= 1: minimum −1 at |x| = 1.
  const GridResult res = grid_global_min(trust_region(), default_grid(trust_region(), 33, 6));
  REQUIRE(res.found);
  CHECK(std::abs(res.value - (-1.0)) <= 1e-4);
  CHECK(std::abs(std::abs(res.x(0)) - 1.0) <= 1e-3);
}

TEST_CASE("equality blocks are sampled on the manifold exactly", "[oracle]") {
  // f = x over x² = 1: candidates are the exact roots ±1; the minimum is −1.
  const SeparableQcqp q =
      scalar_problem(0.0, 0.5, 0.0, 1.0, ConstraintKind::Equality);
  const GridResult res = grid_global_min(q, default_grid(q, 9, 0));
  REQUIRE(res.found);
  CHECK(std::abs(res.value - (-1.0)) <= 1e-9);
  CHECK(std::abs(res.x(0) - (-1.0)) <= 1e-9);
  CHECK(res.worst_violation <= 1e-12);
}

TEST_CASE("an unsatisfiable constraint yields no candidates", "[oracle]") {
  BlockConstraint blk;
  blk.A = mat({{1.0}});
  blk.b = vec({0.0});
  blk.c = 1.0;  // x² + 1 is never near zero from below
  const SeparableQcqp q = SeparableQcqp::create(mat({{1.0}}), vec({0.0}), 0.0, {blk});
  GridSpec spec = default_grid(q, 9, 1);
  const GridResult res = grid_global_min(q, spec);
  CHECK_FALSE(res.found);
}

TEST_CASE("the scan cap rejects oversized grids", "[oracle]") {
  BlockConstraint blk;
  blk.A = Matrix::Identity(8, 8);
  blk.b = Vector::Zero(8);
  blk.c = -1.0;
  const SeparableQcqp q =
      SeparableQcqp::create(Matrix::Identity(8, 8), Vector::Zero(8), 0.0, {blk});
  CHECK_THROWS_AS(grid_global_min(q, default_grid(q, 9, 0)), std::invalid_argument);
}

TEST_CASE("grid specifications are validated", "[oracle]") {
  const SeparableQcqp q = scalar_problem(1.0);
  GridSpec spec;  // empty box
  CHECK_THROWS_AS(grid_global_min(q, spec), std::invalid_argument);
  spec = default_grid(q);
  spec.points_per_dim = 2;
  CHECK_THROWS_AS(grid_global_min(q, spec), std::invalid_argument);
  spec = default_grid(q);
  spec.box_hi = Vector::Zero(3);
  CHECK_THROWS_AS(grid_global_min(q, spec), std::invalid_argument);
}

TEST_CASE("refining the resolution never worsens an interior incumbent", "[oracle]") {
  const SeparableQcqp q = scalar_problem(1.0, -0.2);  // minimizer x = 0.2, interior
  const GridResult coarse = grid_global_min(q, default_grid(q, 9, 0));
  const GridResult fine = grid_global_min(q, default_grid(q, 17, 0));
  REQUIRE(coarse.found);
  REQUIRE(fine.found);
  // 17 nodes contain the 9: the fine value cannot exceed the coarse one.
  CHECK(fine.value <= coarse.value + 1e-12);
  CHECK(fine.evaluated >= coarse.evaluated);
  const GridResult refined = grid_global_min(q, default_grid(q, 9, 3));
  CHECK(refined.value <= coarse.value + 1e-12);
  CHECK(refined.pitch < coarse.pitch);
}

TEST_CASE("thread counts do not change the scan result", "[oracle]") {
  Rng rng(501);
  const SeparableQcqp q = random_convex_blocks(rng, 3, 2, true, true);
  const GridSpec spec = default_grid(q, 11, 1);
  const GridResult one = grid_global_min(q, spec, 1);
  const GridResult four = grid_global_min(q, spec, 4);
  REQUIRE(one.found == four.found);
  if (one.found) {
    CHECK(one.value == four.value);
    CHECK((one.x - four.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(one.evaluated == four.evaluated);
  }
}

TEST_CASE("the certified ball problem shows no duality gap against the oracle", "[oracle]") {
  const SeparableQcqp q = trust_region();
  const GapReport rep = duality_gap_report(q, {}, default_grid(q, 17, 4));
  CHECK(rep.certificate.status == CertStatus::Certified);
  REQUIRE(rep.oracle.found);
  CHECK(std::isfinite(rep.gap_estimate));
  CHECK(std::abs(rep.gap_estimate) <= std::max(1e-3, 2.0 * rep.oracle.error_bound));
}

TEST_CASE("the positive-triangle instance shows a genuine duality gap", "[oracle]") {
  const SeparableQcqp q = generate_odd_cycle(11);
  const GapReport rep = duality_gap_report(q, {}, default_grid(q, 15, 3));
  CHECK(rep.certificate.status == CertStatus::Unknown);
  REQUIRE(rep.oracle.found);
  // The oracle value sits strictly above the dual bound: the gap is real.
  CHECK(rep.gap_estimate > 1e-2);
}

TEST_CASE("a convex instance closes the gap within the grid error", "[oracle]") {
  const SeparableQcqp q = generate_convex(9, 2, 1);
  const GapReport rep = duality_gap_report(q, {}, default_grid(q, 21, 4));
  REQUIRE(rep.oracle.found);
  CHECK(std::abs(rep.gap_estimate) <= std::max(1e-3, 2.0 * rep.oracle.error_bound));
  // Weak duality: the oracle upper bound never sits below the dual bound.
  CHECK(rep.gap_estimate >= -std::max(1e-6, 2.0 * rep.oracle.error_bound));
}
