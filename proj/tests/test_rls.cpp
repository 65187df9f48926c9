#include "helpers.hpp"

using namespace sepqp;
using namespace testutil;

namespace {

RlsInstance toy_instance(Rng& rng, Index rows, Index cols, double rho_scale) {
  Matrix A(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) A(r, c) = rng.normal();
  const Vector b = rng.normal_vector(rows);
  Vector rho(cols + 1);
  for (Index i = 0; i <= cols; ++i) rho(i) = rho_scale * rng.uniform(0.5, 1.0);
  return RlsInstance::create(std::move(A), b, std::move(rho));
}

SolverConfig fast_cfg() {
  SolverConfig cfg;
  cfg.max_outer = 400;
  return cfg;
}

}  // namespace

TEST_CASE("instance construction validates shapes and budgets", "[rls]") {
  CHECK_THROWS_AS(RlsInstance::create(Matrix(0, 0), Vector(), Vector()),
                  std::invalid_argument);
  CHECK_THROWS_AS(RlsInstance::create(Matrix::Ones(2, 1), Vector::Ones(3), vec({1.0, 1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(RlsInstance::create(Matrix::Ones(2, 1), Vector::Ones(2), vec({1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      RlsInstance::create(Matrix::Ones(2, 1), Vector::Ones(2), vec({1.0, 0.0})),
      std::invalid_argument);
  const RlsInstance ok =
      RlsInstance::create(Matrix::Ones(2, 1), Vector::Ones(2), vec({1.0, 1.0}));
  CHECK(ok.rows() == 2);
  CHECK(ok.cols() == 1);
  CHECK(ok.H().cols() == 2);
}

TEST_CASE("the inner standard form has the documented structure", "[rls]") {
  Matrix A(2, 1);
  A << 1.0, 2.0;
  const Vector b = vec({3.0, -1.0});
  const RlsInstance inst = RlsInstance::create(A, b, vec({0.5, 0.7}));
  const Vector x = vec({1.0});  // xbar = (1, −1), signs (+1, −1)
  const SeparableQcqp q = rls_inner_form(inst, x);

  const Index N = 2, m = 2;
  REQUIRE(q.dim() == N * m);
  REQUIRE(q.num_blocks() == 2);
  // Objective: −|x̄ᵢ x̄ⱼ| identity blocks — all ones here.
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      CHECK(inf_norm(q.A0.block(N * i, N * j, N, N) + Matrix::Identity(N, N)) == 0.0);
  CHECK(q.b0.cwiseAbs().maxCoeff() == 0.0);
  CHECK(q.c0 == 0.0);
  const Matrix H = inst.H();
  for (Index i = 0; i < m; ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    CHECK(blk.kind == ConstraintKind::Inequality);
    CHECK(inf_norm(blk.A - Matrix::Identity(N, N)) == 0.0);
    const double s = i == 0 ? 1.0 : -1.0;
    CHECK((blk.b + s * H.col(i)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(blk.c - (H.col(i).squaredNorm() - inst.rho(i))) <= 1e-12);
  }

  // The no-perturbation point: stacked s_i H_i gives constraints −ρ_i and
  // objective −‖H x̄‖².
  Vector delta0(N * m);
  delta0 << H.col(0), -H.col(1);
  const Evaluation ev = evaluate(q, delta0);
  Vector xbar(2);
  xbar << 1.0, -1.0;
  CHECK(std::abs(ev.objective - (-(H * xbar).squaredNorm())) <= 1e-12);
  CHECK(std::abs(ev.constraints[0] + inst.rho(0)) <= 1e-12);
  CHECK(std::abs(ev.constraints[1] + inst.rho(1)) <= 1e-12);
  CHECK(ev.feasible);
}

TEST_CASE("a zero coordinate takes the positive sign convention", "[rls]") {
  Matrix A(2, 1);
  A << 1.0, -1.0;
  const RlsInstance inst = RlsInstance::create(A, vec({2.0, 1.0}), vec({0.4, 0.4}));
  const SeparableQcqp q = rls_inner_form(inst, vec({0.0}));
  // sign(0) = +1 on the first column; the b column keeps sign(−1) = −1.
  CHECK((q.blocks[0].b + inst.H().col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.blocks[1].b - inst.H().col(1)).cwiseAbs().maxCoeff() == 0.0);
  // x̄ = (0, −1): the objective couples only the b-column with itself.
  CHECK(inf_norm(q.A0.topLeftCorner(2, 2)) == 0.0);
  CHECK(inf_norm(q.A0.bottomRightCorner(2, 2) + Matrix::Identity(2, 2)) == 0.0);
  CHECK_THROWS_AS(rls_inner_form(inst, vec({0.0, 1.0})), std::invalid_argument);
}

TEST_CASE("the inner standard form always certifies", "[rls]") {
  Rng rng(601);
  for (int trial = 0; trial < 10; ++trial) {
    const RlsInstance inst = toy_instance(rng, rng.uniform_int(2, 4), rng.uniform_int(1, 2),
                                          rng.uniform(0.2, 0.9));
    const Vector x = rng.normal_vector(inst.cols());
    const Certificate cert = certify(rls_inner_form(inst, x));
    INFO("trial " << trial);
    CHECK(cert.status == CertStatus::Certified);
  }
}

TEST_CASE("vanishing budgets recover the nominal residual", "[rls]") {
  Rng rng(607);
  const RlsInstance inst = toy_instance(rng, 3, 2, 1e-10);
  const Vector x = rng.normal_vector(2);
  const RlsInnerResult inner = rls_inner_max(inst, x, fast_cfg());
  Vector xbar(3);
  xbar << x, -1.0;
  const double nominal = (inst.H() * xbar).squaredNorm();
  CHECK(std::abs(inner.value - nominal) <= 1e-4 * (1.0 + nominal));
  CHECK(inner.delta.cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("the worst-case perturbation respects its ball budgets", "[rls]") {
  Rng rng(613);
  const RlsInstance inst = toy_instance(rng, 3, 1, 0.6);
  const Vector x = vec({0.8});
  const RlsInnerResult inner = rls_inner_max(inst, x, fast_cfg());
  for (Index i = 0; i < inst.cols() + 1; ++i)
    CHECK(inner.delta.col(i).squaredNorm() <= inst.rho(i) + 1e-6);
  // The maximizer does at least as well as no perturbation at all.
  Vector xbar(2);
  xbar << x, -1.0;
  CHECK(inner.value >= (inst.H() * xbar).squaredNorm() - 1e-8);
}

TEST_CASE("the worst-case value grows with the budgets", "[rls]") {
  Rng rng(617);
  Matrix A(3, 1);
  for (Index r = 0; r < 3; ++r) A(r, 0) = rng.normal();
  const Vector b = rng.normal_vector(3);
  const Vector x = vec({0.5});
  const RlsInstance small = RlsInstance::create(A, b, vec({0.2, 0.3}));
  const RlsInstance large = RlsInstance::create(A, b, vec({0.4, 0.6}));
  const double v_small = rls_inner_max(small, x, fast_cfg()).value;
  const double v_large = rls_inner_max(large, x, fast_cfg()).value;
  CHECK(v_large >= v_small - 1e-8);
}

TEST_CASE("the inner maximum agrees with the grid oracle on a tiny instance", "[rls]") {
  Rng rng(619);
  Matrix A(1, 1);
  A << 1.3;
  const RlsInstance inst = RlsInstance::create(A, vec({-0.7}), vec({0.5, 0.8}));
  const Vector x = vec({0.6});
  const SeparableQcqp q = rls_inner_form(inst, x);
  REQUIRE(q.dim() == 2);
  // Subgradient ascent closes the last ~1e-2 of this instance slowly; give it
  // enough outer iterations to reach the grid tolerance.
  SolverConfig cfg;
  cfg.max_outer = 5000;
  const RlsInnerResult inner = rls_inner_max(inst, x, cfg);
  const GridResult grid = grid_global_min(q, default_grid(q, 33, 5));
  REQUIRE(grid.found);
  // The QCQP minimizes the negated squared residual.
  CHECK(std::abs(grid.value + inner.value) <= std::max(1e-3, 2.0 * grid.error_bound));
}

TEST_CASE("with tiny budgets the robust fit reduces to ordinary least squares", "[rls]") {
  Rng rng(631);
  Matrix A(5, 2);
  for (Index r = 0; r < 5; ++r)
    for (Index c = 0; c < 2; ++c) A(r, c) = rng.normal();
  const Vector b = rng.normal_vector(5);
  const RlsInstance inst = RlsInstance::create(A, b, vec({1e-10, 1e-10, 1e-10}));
  const RlsFitResult fit = rls_fit(inst, fast_cfg());
  // Normal-equations oracle, assembled independently of the library solver.
  const Vector ols = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  CHECK(fit.converged);
  CHECK((fit.x - ols).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + ols.cwiseAbs().maxCoeff()));
}

TEST_CASE("the robust fit recovers a planted model under small budgets", "[rls]") {
  Rng rng(641);
  Matrix A(6, 2);
  for (Index r = 0; r < 6; ++r)
    for (Index c = 0; c < 2; ++c) A(r, c) = rng.normal();
  const Vector x_true = vec({1.2, -0.7});
  const Vector b = A * x_true;
  const RlsInstance inst = RlsInstance::create(A, b, vec({1e-6, 1e-6, 1e-6}));
  const RlsFitResult fit = rls_fit(inst, fast_cfg());
  CHECK((fit.x - x_true).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("the outer descent history settles monotonically", "[rls]") {
  Rng rng(643);
  const RlsInstance inst = toy_instance(rng, 4, 1, 0.5);
  const RlsFitResult fit = rls_fit(inst, fast_cfg(), 25);
  REQUIRE_FALSE(fit.history.empty());
  for (std::size_t k = 1; k < fit.history.size(); ++k)
    CHECK(fit.history[k] <= fit.history[k - 1] + 1e-10);
  // The final robust objective never undercuts the unperturbed residual.
  Vector xbar(2);
  xbar << fit.x, -1.0;
  CHECK(fit.history.back() >= (inst.H() * xbar).squaredNorm() - 1e-6);
}
