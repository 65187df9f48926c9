#pragma once

// Robust least squares with column-wise perturbation budgets:
//
//   min_x  max_{‖Δ_i‖ ≤ √ρ_i}  ‖(A + Δ_A) x − (b + Δ_b)‖²,
//
// written as min_x φ(x) with φ the inner maximum over the stacked
// perturbation Δ = [Δ_A, Δ_b] of H = [A, b].  With x̄ = (x, −1), the inner
// problem is a QCQP whose constraints are the per-column balls — one block
// per column after a sign-absorbing change of variables — and it always
// passes the diagonal certificate, so the inner maximum is computed globally
// by dual ascent.  The outer minimization is a gradient descent with
// backtracking on the (convex) function φ.

#include "sepqp/oracle.hpp"
#include "sepqp/rank1.hpp"

namespace sepqp {

struct RlsInstance {
  Matrix A;    // N×p data matrix
  Vector b;    // N observations
  Vector rho;  // p+1 positive column budgets (last entry budgets b's column)

  static RlsInstance create(Matrix A, Vector b, Vector rho) {
    if (A.rows() == 0 || A.cols() == 0)
      throw std::invalid_argument("rls: data matrix must be nonempty");
    if (b.size() != A.rows())
      throw std::invalid_argument("rls: observation length must match the row count");
    if (rho.size() != A.cols() + 1)
      throw std::invalid_argument("rls: need one budget per column of [A, b]");
    if (!all_finite(A) || !((b.array().isFinite()).all()) ||
        !((rho.array().isFinite()).all()))
      throw std::invalid_argument("rls: entries must be finite");
    for (Index i = 0; i < rho.size(); ++i)
      if (!(rho(i) > 0.0)) throw std::invalid_argument("rls: budgets must be positive");
    return RlsInstance{std::move(A), std::move(b), std::move(rho)};
  }

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }

  Matrix H() const {
    Matrix h(A.rows(), A.cols() + 1);
    h << A, b;
    return h;
  }
};

// Builds the inner maximization at a fixed x as a minimization QCQP in the
// stacked perturbation variable.  With x̄ = (x, −1), s_i = sign(x̄_i)
// (sign(0) = +1) and the change of variables Δ'_i = s_i (Δ_i + H_i),
//
//   −‖(H+Δ)x̄‖²  =  Δ'ᵀ (−|x̄ x̄ᵀ| ⊗ I_N) Δ',
//   ‖Δ_i‖² ≤ ρ_i  ⇔  ‖Δ'_i‖² − 2 s_i H_iᵀ Δ'_i + ‖H_i‖² − ρ_i ≤ 0,
//
// so the QCQP minimizes the negated robust residual over per-column balls.
inline SeparableQcqp rls_inner_form(const RlsInstance& inst, const Vector& x) {
  if (x.size() != inst.cols())
    throw std::invalid_argument("rls: x length must match the column count");
  const Index N = inst.rows();
  const Index m = inst.cols() + 1;  // number of perturbed columns / blocks
  const Matrix H = inst.H();

  Vector xbar(m);
  xbar << x, -1.0;
  Vector sgn(m);
  for (Index i = 0; i < m; ++i) sgn(i) = xbar(i) >= 0.0 ? 1.0 : -1.0;

  Matrix A0 = Matrix::Zero(N * m, N * m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      A0.block(N * i, N * j, N, N) =
          -std::abs(xbar(i) * xbar(j)) * Matrix::Identity(N, N);

  std::vector<BlockConstraint> blocks;
  blocks.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    BlockConstraint blk;
    blk.A = Matrix::Identity(N, N);
    blk.b = -sgn(i) * H.col(i);
    blk.c = H.col(i).squaredNorm() - inst.rho(i);
    blk.kind = ConstraintKind::Inequality;
    blocks.push_back(std::move(blk));
  }
  return SeparableQcqp::create(std::move(A0), Vector::Zero(N * m), 0.0, std::move(blocks));
}

struct RlsInnerResult {
  Matrix delta;      // worst-case perturbation of H = [A, b]
  double value = 0;  // ‖(H+Δ)x̄‖² at the maximizer
  Certificate certificate;
  Solution solution;
};

// Global inner maximum via the certified dual solve on the standard form.
inline RlsInnerResult rls_inner_max(const RlsInstance& inst, const Vector& x,
                                    SolverConfig cfg = {}, const Tolerances& tol = {}) {
  const SeparableQcqp q = rls_inner_form(inst, x);
  RlsInnerResult out;
  out.certificate = certify(q, tol);
  if (out.certificate.status != CertStatus::Certified)
    throw Error("rls: the inner problem unexpectedly failed certification; "
                "the worst-case value would not be global");
  out.solution = solve_dual_ascent(q, cfg, tol);
  if (out.solution.x.size() == 0)
    throw Error("rls: inner solve produced no primal point (" + out.solution.note + ")");

  const Index N = inst.rows();
  const Index m = inst.cols() + 1;
  const Matrix H = inst.H();
  Vector xbar(m);
  xbar << x, -1.0;
  out.delta = Matrix(N, m);
  for (Index i = 0; i < m; ++i) {
    const double s = xbar(i) >= 0.0 ? 1.0 : -1.0;
    out.delta.col(i) = s * out.solution.x.segment(N * i, N) - H.col(i);
  }
  out.value = ((H + out.delta) * xbar).squaredNorm();
  return out;
}

struct RlsFitResult {
  Vector x;
  std::vector<double> history;  // robust objective after each outer step
  bool converged = false;
  std::string note;
};

inline Vector ols_solution(const Matrix& A, const Vector& b) {
  return A.colPivHouseholderQr().solve(b);
}

// Outer minimization of φ(x) = max_Δ ‖(A+Δ_A)x − (b+Δ_b)‖²: gradient descent
// with Armijo backtracking, gradient 2 (A+Δ_A)ᵀ ((A+Δ_A) x − (b+Δ_b)) at the
// inner maximizer.  Repeated failure to descend even with halved base steps
// is reported as non-convergence.
inline RlsFitResult rls_fit(const RlsInstance& inst, SolverConfig cfg = {},
                            int max_outer_steps = 60, double grad_tol = 1e-7,
                            const Tolerances& tol = {}) {
  RlsFitResult out;
  out.x = ols_solution(inst.A, inst.b);
  RlsInnerResult inner = rls_inner_max(inst, out.x, cfg, tol);
  out.history.push_back(inner.value);

  double base_step = 1.0;
  int stall_count = 0;
  for (int it = 0; it < max_outer_steps; ++it) {
    const Matrix Ad = inst.A + inner.delta.leftCols(inst.cols());
    const Vector bd = inst.b + inner.delta.col(inst.cols());
    const Vector grad = 2.0 * Ad.transpose() * (Ad * out.x - bd);
    const double gnorm = grad.norm();
    if (gnorm <= grad_tol * (1.0 + std::abs(inner.value))) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    double step = base_step;
    for (int ls = 0; ls < 25; ++ls, step *= 0.5) {
      const Vector x_try = out.x - step * grad;
      const RlsInnerResult trial = rls_inner_max(inst, x_try, cfg, tol);
      if (trial.value <= inner.value - 1e-4 * step * gnorm * gnorm) {
        out.x = x_try;
        inner = trial;
        out.history.push_back(trial.value);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      base_step *= 0.5;
      if (++stall_count >= 20) {
        out.note = "no descent direction after repeated step halving";
        break;
      }
    } else {
      stall_count = 0;
      base_step = std::min(1.0, base_step * 2.0);
    }
    if (out.history.size() >= 2 &&
        std::abs(out.history[out.history.size() - 2] - out.history.back()) <=
            cfg.gap_tol * (1.0 + std::abs(out.history.back()))) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace sepqp
