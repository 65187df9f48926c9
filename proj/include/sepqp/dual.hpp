#pragma once

// Dual machinery.  The Lagrangian of the block-separable QCQP is a quadratic
// in x for fixed multipliers λ,
//
//   L(x, λ) = xᵀ A(λ) x + 2 b(λ)ᵀ x + c(λ),
//   A(λ) = A0 + Σ λ_i Ã_i,   b(λ) = b0 + Σ λ_i b̃_i,   c(λ) = c0 + Σ λ_i c_i,
//
// so the dual function has the closed form q(λ) = c(λ) − b(λ)ᵀ A(λ)† b(λ)
// on the domain where A(λ) is PSD and b(λ) ∈ range(A(λ)), and is −∞
// elsewhere.  The feasible multiplier set is W ∩ Γ: W keeps A(λ) PSD, Γ
// restricts inequality multipliers to be nonnegative.
//
// This header implements dual evaluation, inner minimizers (exact
// pseudo-inverse, augmented-Lagrangian Newton, FLEXA block decomposition),
// Euclidean projection onto W ∩ Γ, the projected subgradient outer loop,
// primal recovery from a dual solution, and a strict-feasibility probe.

#include "sepqp/certify.hpp"

#include <algorithm>
#include <deque>
#include <thread>

namespace sepqp {

// Thrown when no multiplier keeping A(λ) PSD can be located.
class SpectrahedronEmptyError : public Error {
 public:
  using Error::Error;
};

enum class StepSchedule { Constant, InvK, InvSqrtK };
enum class Method { Ascent, Augmented, Flexa };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Ascent: return "ascent";
    case Method::Augmented: return "augmented";
    case Method::Flexa: return "flexa";
  }
  return "?";
}

struct SolverConfig {
  Method method = Method::Ascent;
  StepSchedule schedule = StepSchedule::InvSqrtK;
  double mu0 = 0.0;  // 0 → automatic: 1/(1+‖g(x¹)‖)
  int max_outer = 2000;
  int max_inner = 500;
  double gap_tol = 1e-6;
  double kkt_tol = 1e-8;
  double step_tol = 1e-9;
  double rho_aug = 1.0;        // augmented-Lagrangian penalty weight
  double prox_weight = 1.0;    // uniform FLEXA proximal weight prox_i
  Vector prox_weights;         // optional per-block override
  double flexa_step = 0.9;     // combination step α_q ∈ (0, 1]
  int window = 10;             // stopping window for dual improvement
  int threads = 1;             // parallelism cap for FLEXA block updates
  bool polish = true;          // final coordinate-wise dual refinement
  std::uint64_t seed = 0;      // multistart draws (probe, recovery)

  void validate() const {
    if (!(gap_tol > 0.0) || !(kkt_tol > 0.0) || !(step_tol > 0.0))
      throw std::invalid_argument("config: tolerances must be positive");
    if (!(flexa_step > 0.0) || flexa_step > 1.0)
      throw std::invalid_argument("config: flexa_step must lie in (0, 1]");
    if (max_outer < 1 || max_inner < 1)
      throw std::invalid_argument("config: iteration limits must be at least 1");
    if (rho_aug < 0.0) throw std::invalid_argument("config: rho_aug must be nonnegative");
    if (prox_weight < 0.0) throw std::invalid_argument("config: prox_weight must be nonnegative");
    if (window < 1) throw std::invalid_argument("config: window must be at least 1");
  }

  double prox_of(int i) const {
    return prox_weights.size() > 0 ? prox_weights(i) : prox_weight;
  }
};

struct DualIterate {
  Vector lambda;
  Vector x;
  double q_value = kNegInf;
  Vector subgrad;  // g(x)
  int iter = 0;
};

// ---------------------------------------------------------------------------
// Lagrangian assembly and the dual function
// ---------------------------------------------------------------------------

struct LagrangianParts {
  Matrix A;
  Vector b;
  double c = 0.0;
};

inline void check_multiplier(const SeparableQcqp& q, const Vector& lambda) {
  if (lambda.size() != q.num_blocks())
    throw std::invalid_argument("lambda: size does not match the number of blocks");
  for (int i = 0; i < q.num_blocks(); ++i)
    if (q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality &&
        lambda(i) < -1e-12)
      throw std::invalid_argument("lambda: negative multiplier on an inequality block");
}

inline LagrangianParts assemble_lagrangian(const SeparableQcqp& q, const Vector& lambda) {
  LagrangianParts parts{q.A0, q.b0, q.c0};
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const Index off = q.block_offset(i);
    parts.A.block(off, off, blk.dim(), blk.dim()) += lambda(i) * blk.A;
    parts.b.segment(off, blk.dim()) += lambda(i) * blk.b;
    parts.c += lambda(i) * blk.c;
  }
  return parts;
}

struct LagrangianMin {
  Vector x;          // minimum-norm minimizer −A(λ)† b(λ)
  Matrix nullspace;  // basis of the Hessian nullspace
  double q_value = kNegInf;
  double min_eig = 0.0;
  bool domain_ok = false;  // PSD and range conditions both hold
};

inline LagrangianMin lagrangian_argmin_full(const SeparableQcqp& q, const Vector& lambda,
                                            const Tolerances& tol = {}) {
  check_multiplier(q, lambda);
  const LagrangianParts parts = assemble_lagrangian(q, lambda);
  const SymEig e = sym_eig(parts.A);
  // Eigenvalues inside the PSD tolerance band count as zero for inversion,
  // so a barely-indefinite matrix cannot inject huge spurious components.
  const double cut = std::max(rank_threshold(e), tol.eig_zero);
  LagrangianMin out;
  out.min_eig = min_eigenvalue(e);
  out.x = -pinv_apply(e, parts.b, cut);
  out.nullspace = nullspace_basis(e, cut);
  out.domain_ok = out.min_eig >= -tol.eig_zero && in_range(e, parts.b, cut);
  out.q_value = out.domain_ok ? parts.c + parts.b.dot(out.x) : kNegInf;
  return out;
}

inline double dual_value(const SeparableQcqp& q, const Vector& lambda,
                         const Tolerances& tol = {}) {
  return lagrangian_argmin_full(q, lambda, tol).q_value;
}

inline Vector lagrangian_argmin(const SeparableQcqp& q, const Vector& lambda,
                                const Tolerances& tol = {}) {
  LagrangianMin m = lagrangian_argmin_full(q, lambda, tol);
  if (!m.domain_ok)
    throw std::domain_error("lagrangian_argmin: dual function is -inf at this multiplier");
  return m.x;
}

inline Vector constraint_values(const SeparableQcqp& q, const Vector& x) {
  Vector g(q.num_blocks());
  for (int i = 0; i < q.num_blocks(); ++i) g(i) = q.constraint(x, i);
  return g;
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian inner minimizer
// ---------------------------------------------------------------------------

struct AugmentedResult {
  Vector x;
  bool converged = false;
  double grad_norm = 0.0;
};

// Minimizes L(x,λ) + ρ Σ pen(g_i(x)) with pen = squared value on equality
// blocks and squared positive part on inequality blocks, by damped Newton
// with Armijo backtracking started from x_warm.
inline AugmentedResult augmented_argmin(const SeparableQcqp& q, const Vector& lambda,
                                        double rho_aug, const Vector& x_warm,
                                        const SolverConfig& cfg = {},
                                        const Tolerances& tol = {}) {
  check_multiplier(q, lambda);
  if (!(rho_aug > 0.0)) throw std::invalid_argument("rho_aug: must be positive");
  const LagrangianParts parts = assemble_lagrangian(q, lambda);
  const Index p = q.dim();

  auto phi = [&](const Vector& x) {
    double val = x.dot(parts.A * x) + 2.0 * parts.b.dot(x) + parts.c;
    for (int i = 0; i < q.num_blocks(); ++i) {
      const double g = q.constraint(x, i);
      const double viol =
          q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Equality
              ? g
              : std::max(g, 0.0);
      val += rho_aug * viol * viol;
    }
    return val;
  };

  Vector x = x_warm.size() == p ? x_warm : Vector::Zero(p);
  AugmentedResult out;
  double damping = 1e-8;
  for (int it = 0; it < cfg.max_inner; ++it) {
    Vector grad = 2.0 * (parts.A * x + parts.b);
    Matrix hess = 2.0 * parts.A;
    for (int i = 0; i < q.num_blocks(); ++i) {
      const auto& blk = q.blocks[static_cast<std::size_t>(i)];
      const Index off = q.block_offset(i);
      const double g = q.constraint(x, i);
      const bool active = blk.kind == ConstraintKind::Equality || g > 0.0;
      const double w = blk.kind == ConstraintKind::Equality ? g : std::max(g, 0.0);
      const Vector gg = 2.0 * (blk.A * x.segment(off, blk.dim()) + blk.b);
      grad.segment(off, blk.dim()) += rho_aug * 2.0 * w * gg;
      if (active) {
        hess.block(off, off, blk.dim(), blk.dim()) += rho_aug * (2.0 * gg * gg.transpose() + 4.0 * w * blk.A);
      }
    }
    out.grad_norm = grad.cwiseAbs().maxCoeff();
    if (out.grad_norm <= cfg.kkt_tol) {
      out.converged = true;
      break;
    }
    // Damped Newton step; fall back to steeper damping until it descends.
    const double base = phi(x);
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Matrix h = hess + damping * Matrix::Identity(p, p);
      Eigen::LDLT<Matrix> ldlt(h);
      Vector dir = ldlt.info() == Eigen::Success ? Vector(-ldlt.solve(grad)) : Vector(-grad);
      double step = 1.0;
      for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
        const Vector xt = x + step * dir;
        if (phi(xt) <= base - 1e-4 * step * std::abs(grad.dot(dir))) {
          x = xt;
          accepted = true;
          damping = std::max(damping * 0.25, 1e-10);
          break;
        }
      }
      if (!accepted) damping *= 10.0;
    }
    if (!accepted) break;  // cannot descend further at this precision
  }
  out.x = x;
  return out;
}

// ---------------------------------------------------------------------------
// Projection onto W ∩ Γ
// ---------------------------------------------------------------------------

namespace detail {

inline Vector clip_gamma(const SeparableQcqp& q, Vector lambda) {
  for (int i = 0; i < q.num_blocks(); ++i)
    if (q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality)
      lambda(i) = std::max(lambda(i), 0.0);
  return lambda;
}

struct EigProbe {
  double min_eig;
  Vector vec;
};

inline EigProbe min_eig_probe(const SeparableQcqp& q, const Vector& lambda) {
  const Matrix a = assemble_lagrangian(q, lambda).A;
  const SymEig e = sym_eig(a);
  return {min_eigenvalue(e), e.vectors.col(0)};
}

// Subgradient of λ ↦ λ_min(A(λ)): d_i = vᵀ Ã_i v with v the minimal
// eigenvector (restricted to block i's coordinates).
inline Vector min_eig_subgradient(const SeparableQcqp& q, const Vector& v) {
  Vector d(q.num_blocks());
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const auto vi = v.segment(q.block_offset(i), blk.dim());
    d(i) = vi.dot(blk.A * vi);
  }
  return d;
}

// Pushes lambda along the min-eigenvalue subgradient direction until
// A(λ) ⪰ (margin − eig_zero)·I, staying in Γ.  First-order feasibility
// restoration: from mildly infeasible points with margin 0 this is the
// projection up to second order.  A positive margin lands strictly inside
// the spectrahedron, where the dual function is guaranteed finite.
inline Vector restore_to_W(const SeparableQcqp& q, Vector lambda, const Tolerances& tol,
                           double margin = 0.0) {
  lambda = clip_gamma(q, lambda);
  for (int pass = 0; pass < 50; ++pass) {
    const EigProbe probe = min_eig_probe(q, lambda);
    if (probe.min_eig >= margin - tol.eig_zero) return lambda;
    const Vector d = min_eig_subgradient(q, probe.vec);
    const double dn2 = d.squaredNorm();
    if (dn2 <= 1e-26 * (1.0 + lambda.squaredNorm()))
      throw SpectrahedronEmptyError(
          "projection failed: the multiplier set keeping the Hessian PSD appears empty "
          "(no direction improves the minimum eigenvalue)");
    // Bracket a root of ν ↦ λ_min(A(clip(λ + ν d))) − margin and bisect to it.
    // The excursion cap stops runaway brackets: when the eigenvalue plateaus
    // below the target, doubling would otherwise race the multiplier to
    // astronomical values before giving up.
    const double excursion_cap = 1e6 * (1.0 + lambda.norm());
    double lo = 0.0, hi = (margin - probe.min_eig) / dn2;
    double f_hi;
    for (int grow = 0;; ++grow) {
      f_hi = min_eig_probe(q, clip_gamma(q, lambda + hi * d)).min_eig;
      if (f_hi >= margin) break;
      lo = hi;
      hi *= 2.0;
      if (grow >= 60 || hi * std::sqrt(dn2) > excursion_cap)
        throw SpectrahedronEmptyError(
            "projection failed: minimum eigenvalue cannot be restored along the "
            "subgradient direction (multiplier set likely empty)");
    }
    for (int bis = 0; bis < 80; ++bis) {
      const double mid = 0.5 * (lo + hi);
      if (min_eig_probe(q, clip_gamma(q, lambda + mid * d)).min_eig >= margin)
        hi = mid;
      else
        lo = mid;
      if ((hi - lo) * std::sqrt(dn2) <= 0.1 * tol.proj) break;
    }
    lambda = clip_gamma(q, lambda + hi * d);  // hi endpoint: certified inside W
  }
  return lambda;
}

}  // namespace detail

// Euclidean projection of lambda_temp onto W ∩ Γ.  The optimality system is
// λ* = clip_Γ(λ_temp + θ d(λ*)) with θ ≥ 0 the multiplier of the eigenvalue
// constraint; θ is located by doubling + bisection on the resulting minimum
// eigenvalue, with a damped fixed-point iteration for λ(θ) at each trial θ.
inline Vector project_W(const SeparableQcqp& q, const Vector& lambda_temp,
                        const Tolerances& tol = {}) {
  if (lambda_temp.size() != q.num_blocks())
    throw std::invalid_argument("lambda_temp: size does not match the number of blocks");
  const Vector start = detail::clip_gamma(q, lambda_temp);
  if (detail::min_eig_probe(q, start).min_eig >= -tol.eig_zero)
    return start;  // already feasible: projection is the Γ clip itself

  // λ(θ): damped fixed point of λ ← clip(λ_temp + θ d(λ)).
  auto lambda_of_theta = [&](double theta, Vector warm) {
    Vector lam = std::move(warm);
    for (int it = 0; it < 80; ++it) {
      const detail::EigProbe probe = detail::min_eig_probe(q, lam);
      const Vector target =
          detail::clip_gamma(q, lambda_temp + theta * detail::min_eig_subgradient(q, probe.vec));
      const double move = (target - lam).norm();
      lam = lam + 0.5 * (target - lam);
      if (move <= 0.5 * tol.proj) break;
    }
    return lam;
  };

  // Bracket the smallest θ with λ_min(A(λ(θ))) ≥ 0.
  double theta_hi = 1.0, theta_lo = 0.0;
  Vector lam_hi;
  bool bracketed = false;
  Vector warm = start;
  for (int grow = 0; grow < 60; ++grow) {
    lam_hi = lambda_of_theta(theta_hi, warm);
    warm = lam_hi;
    if (detail::min_eig_probe(q, lam_hi).min_eig >= 0.0) {
      bracketed = true;
      break;
    }
    theta_lo = theta_hi;
    theta_hi *= 2.0;
  }
  if (!bracketed) {
    // Either W is empty or the fixed point is uncooperative; fall back to
    // feasibility restoration, which throws when W looks empty.
    return detail::restore_to_W(q, start, tol);
  }
  Vector best = lam_hi;
  for (int bis = 0; bis < 60; ++bis) {
    const double mid = 0.5 * (theta_lo + theta_hi);
    const Vector lam = lambda_of_theta(mid, best);
    if (detail::min_eig_probe(q, lam).min_eig >= -0.5 * tol.eig_zero) {
      theta_hi = mid;
      best = lam;
    } else {
      theta_lo = mid;
    }
    if (theta_hi - theta_lo <= 1e-12 * (1.0 + theta_hi)) break;
  }
  // Belt and braces: guarantee the result sits in W within tolerance.
  if (detail::min_eig_probe(q, best).min_eig < -tol.eig_zero)
    best = detail::restore_to_W(q, best, tol);
  return best;
}

// ---------------------------------------------------------------------------
// FLEXA block-parallel inner minimizer
// ---------------------------------------------------------------------------

// One multiplier-fixed inner solve: repeatedly minimize per-block strongly
// convex surrogates around the current pivot and combine with step α_q.
// Block i's surrogate Hessian is X_i = A0^{ii} + λ_i A_i + prox_i I and its
// minimizer solves X_i x̃_i = prox_i x_i − s_i with s_i the coupling term
// b0_i + λ_i b_i + Σ_{j≠i} A0^{ij} x_j.  At a fixed point this is exactly
// ∇_x L(x, λ) = 0.
inline Vector flexa_inner(const SeparableQcqp& q, const Vector& lambda,
                          const Vector& x_pivot, const SolverConfig& cfg = {},
                          const Tolerances& tol = {}) {
  check_multiplier(q, lambda);
  cfg.validate();
  const Index p = q.dim();
  const int N = q.num_blocks();
  const LagrangianParts parts = assemble_lagrangian(q, lambda);

  // Per-block surrogate factorizations; λ is fixed for the whole inner solve.
  std::vector<SymEig> factor(static_cast<std::size_t>(N));
  std::vector<double> cut(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const Index off = q.block_offset(i);
    Matrix Xi = q.A0.block(off, off, blk.dim(), blk.dim()) + lambda(i) * blk.A;
    if (min_eigenvalue(sym_eig(Xi)) < -std::sqrt(tol.eig_zero))
      throw Error("flexa_inner: block surrogate is not positive semidefinite; "
                  "the multiplier has left the feasible spectrahedron");
    Xi += cfg.prox_of(i) * Matrix::Identity(blk.dim(), blk.dim());
    factor[static_cast<std::size_t>(i)] = sym_eig(Xi);
    cut[static_cast<std::size_t>(i)] =
        std::max(rank_threshold(factor[static_cast<std::size_t>(i)]), tol.eig_zero);
  }

  Vector x = x_pivot.size() == p ? x_pivot : Vector::Zero(p);
  Vector x_next = x;

  auto update_block = [&](int i, const Vector& snapshot) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const Index off = q.block_offset(i);
    // s_i = b(λ)_i + (A0 x)_i − A0^{ii} x_i  (coupling through the objective)
    const Vector si = parts.b.segment(off, blk.dim()) +
                      q.A0.middleRows(off, blk.dim()) * snapshot -
                      q.A0.block(off, off, blk.dim(), blk.dim()) *
                          snapshot.segment(off, blk.dim());
    const Vector rhs = cfg.prox_of(i) * snapshot.segment(off, blk.dim()) - si;
    const Vector xt = pinv_apply(factor[static_cast<std::size_t>(i)], rhs,
                                 cut[static_cast<std::size_t>(i)]);
    x_next.segment(off, blk.dim()) =
        snapshot.segment(off, blk.dim()) +
        cfg.flexa_step * (xt - snapshot.segment(off, blk.dim()));
  };

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int threads = std::max(1, std::min(cfg.threads > 0 ? cfg.threads : hw, N));

  for (int it = 0; it < cfg.max_inner; ++it) {
    const Vector snapshot = x;  // bulk-synchronous pivot for all blocks
    if (threads > 1) {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(threads));
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          for (int i = t; i < N; i += threads) update_block(i, snapshot);
        });
      for (auto& th : pool) th.join();
    } else {
      for (int i = 0; i < N; ++i) update_block(i, snapshot);
    }
    x = x_next;
    const double grad_norm = (2.0 * (parts.A * x + parts.b)).cwiseAbs().maxCoeff();
    if (grad_norm <= cfg.kkt_tol) break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Strict feasibility probe
// ---------------------------------------------------------------------------

struct ProbeResult {
  bool found = false;
  Vector lambda;
};

// Heuristic search for λ ∈ Γ with A(λ) ≻ 0: coordinate ascent on the minimum
// eigenvalue from λ = 0, then seeded random multistarts.  A negative outcome
// is inconclusive, not a proof of emptiness.
inline ProbeResult strict_feasibility_probe(const SeparableQcqp& q,
                                            const Tolerances& tol = {},
                                            std::uint64_t seed = 0) {
  const int N = q.num_blocks();

  auto ascend = [&](Vector lam) -> std::optional<Vector> {
    lam = detail::clip_gamma(q, lam);
    for (int pass = 0; pass < 60; ++pass) {
      const detail::EigProbe probe = detail::min_eig_probe(q, lam);
      if (probe.min_eig > tol.eig_zero) return lam;
      const Vector d = detail::min_eig_subgradient(q, probe.vec);
      const double dn2 = d.squaredNorm();
      if (dn2 <= 1e-24) return std::nullopt;
      const double eta0 = (std::max(0.1, std::abs(probe.min_eig))) / dn2;
      double best_gain = 0.0;
      Vector best = lam;
      for (double mult : {0.5, 1.0, 2.0, 4.0}) {
        const Vector trial = detail::clip_gamma(q, lam + mult * eta0 * d);
        const double gain = detail::min_eig_probe(q, trial).min_eig - probe.min_eig;
        if (gain > best_gain) {
          best_gain = gain;
          best = trial;
        }
      }
      if (best_gain <= 1e-14) return std::nullopt;  // stalled
      lam = best;
    }
    return std::nullopt;
  };

  if (auto hit = ascend(Vector::Zero(N))) return {true, *hit};
  Rng rng(seed ^ 0x5eedf00dULL);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double scale = std::pow(10.0, attempt % 3);
    Vector lam(N);
    for (int i = 0; i < N; ++i) {
      lam(i) = rng.normal() * scale;
      if (q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality)
        lam(i) = std::abs(lam(i));
    }
    if (auto hit = ascend(lam)) return {true, *hit};
  }
  return {false, Vector()};
}

// ---------------------------------------------------------------------------
// Primal recovery
// ---------------------------------------------------------------------------

struct RecoveryResult {
  bool found = false;
  Vector x;
  std::string note;
};

// From a dual solution λ*, the primal candidates live on the affine set
// base + span(nullspace of A(λ*)).  The base point is the minimum-norm
// stationary point; the sweep searches nullspace coefficients for a point
// that is feasible and complementary (λ*_i g_i = 0).
inline RecoveryResult recover_primal(const SeparableQcqp& q, const Vector& lambda_star,
                                     const SolverConfig& cfg = {},
                                     const Tolerances& tol = {}) {
  LagrangianMin m = lagrangian_argmin_full(q, lambda_star, tol);
  if (!m.domain_ok)
    return {false, Vector(), "dual function is -inf at the supplied multiplier"};
  const Index d = m.nullspace.cols();
  if (d == 0) {
    // PD Hessian: the minimizer is unique; nothing to search.
    return {true, m.x, "unique stationary point (positive definite Hessian)"};
  }
  if (d > 4)
    return {false, Vector(),
            "nullspace dimension " + std::to_string(d) +
                " exceeds the sweep limit of 4; the degenerate multi-solution case "
                "needs a dedicated method"};

  const double act_tol = 1e-7 * (1.0 + lambda_star.cwiseAbs().maxCoeff());
  auto residual = [&](const Vector& x) {
    double r = 0.0;
    for (int i = 0; i < q.num_blocks(); ++i) {
      const auto& blk = q.blocks[static_cast<std::size_t>(i)];
      const double g = q.constraint(x, i);
      if (blk.kind == ConstraintKind::Equality)
        r = std::max(r, std::abs(g));
      else {
        r = std::max(r, std::max(g, 0.0));                    // feasibility
        if (std::abs(lambda_star(i)) > act_tol)
          r = std::max(r, std::abs(lambda_star(i) * g));      // complementarity
      }
    }
    return r;
  };

  auto point_of = [&](const Vector& t) { return Vector(m.x + m.nullspace * t); };
  Vector t = Vector::Zero(d);
  double best_res = residual(point_of(t));
  Vector best_t = t;
  Rng rng(cfg.seed ^ 0x4ec07e21ULL);

  const double accept = std::max(tol.feas, cfg.kkt_tol);
  for (int attempt = 0; attempt < 24 && best_res > accept; ++attempt) {
    if (attempt == 0)
      t = Vector::Zero(d);
    else {
      t = Vector(d);
      const double scale = std::pow(2.0, attempt % 6);
      for (Index j = 0; j < d; ++j) t(j) = rng.normal() * scale;
    }
    double res = residual(point_of(t));
    for (int pass = 0; pass < 60 && res > accept; ++pass) {
      bool improved = false;
      for (Index j = 0; j < d; ++j) {
        // Most violated target block as a 1-D quadratic in t_j.
        int worst = -1;
        double worst_val = accept;
        const Vector x = point_of(t);
        for (int i = 0; i < q.num_blocks(); ++i) {
          const auto& blk = q.blocks[static_cast<std::size_t>(i)];
          const double g = q.constraint(x, i);
          double v;
          if (blk.kind == ConstraintKind::Equality)
            v = std::abs(g);
          else if (std::abs(lambda_star(i)) > act_tol)
            v = std::abs(g);
          else
            v = std::max(g, 0.0);
          if (v > worst_val) {
            worst_val = v;
            worst = i;
          }
        }
        if (worst < 0) break;
        const auto& blk = q.blocks[static_cast<std::size_t>(worst)];
        const Index off = q.block_offset(worst);
        const Vector uj = m.nullspace.col(j).segment(off, blk.dim());
        const Vector xb = x.segment(off, blk.dim());
        // g(t_j + s) = a s² + bb s + cc
        const double a = uj.dot(blk.A * uj);
        const double bb = 2.0 * (uj.dot(blk.A * xb) + blk.b.dot(uj));
        const double cc = q.constraint(x, worst);
        std::vector<double> cands;
        if (std::abs(a) > 1e-14) {
          const double disc = bb * bb - 4.0 * a * cc;
          if (disc >= 0.0) {
            cands.push_back((-bb - std::sqrt(disc)) / (2.0 * a));
            cands.push_back((-bb + std::sqrt(disc)) / (2.0 * a));
          } else {
            cands.push_back(-bb / (2.0 * a));  // vertex: least |g| along this line
          }
        } else if (std::abs(bb) > 1e-14) {
          cands.push_back(-cc / bb);
        }
        for (const double s : cands) {
          Vector t_try = t;
          t_try(j) += s;
          const double r_try = residual(point_of(t_try));
          if (r_try < res - 1e-15) {
            res = r_try;
            t = t_try;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    if (res < best_res) {
      best_res = res;
      best_t = t;
    }
  }
  if (best_res <= accept) return {true, point_of(best_t), ""};
  return {false, Vector(),
          "no feasible complementary point found along the nullspace sweep "
          "(possible multi-solution degeneracy)"};
}

// ---------------------------------------------------------------------------
// Outer loop: projected dual subgradient ascent
// ---------------------------------------------------------------------------

namespace detail {

// Coordinate-wise golden-section refinement of the concave dual function,
// used as a final polish after the subgradient phase.
inline void polish_dual(const SeparableQcqp& q, Vector& lambda, double& q_best,
                        const Tolerances& tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int pass = 0; pass < 3; ++pass) {
    for (int i = 0; i < q.num_blocks(); ++i) {
      const bool ineq =
          q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality;
      auto value_at = [&](double v) {
        Vector lam = lambda;
        lam(i) = v;
        return dual_value(q, lam, tol);
      };
      // Expand a bracket around the current coordinate; -inf acts as a wall.
      // When a probe hits the wall, bisect toward it so the bracket still
      // reaches the whole finite stretch on this side.
      const double h0 = 0.25 * (1.0 + std::abs(lambda(i)));
      double lo = lambda(i), hi = lambda(i);
      double h = h0;
      for (int qq = 0; qq < 20; ++qq, h *= 2.0) {
        const double cand = ineq ? std::max(0.0, lambda(i) - h) : lambda(i) - h;
        if (value_at(cand) == kNegInf) {
          double bad = cand;
          for (int bs = 0; bs < 50 && lo - bad > 1e-12 * (1.0 + std::abs(lo)); ++bs) {
            const double mid = 0.5 * (lo + bad);
            if (value_at(mid) == kNegInf)
              bad = mid;
            else
              lo = mid;
          }
          break;
        }
        lo = cand;
        if (cand == 0.0 && ineq) break;
      }
      h = h0;
      for (int qq = 0; qq < 20; ++qq, h *= 2.0) {
        const double cand = lambda(i) + h;
        if (value_at(cand) == kNegInf) {
          double bad = cand;
          for (int bs = 0; bs < 50 && bad - hi > 1e-12 * (1.0 + std::abs(hi)); ++bs) {
            const double mid = 0.5 * (hi + bad);
            if (value_at(mid) == kNegInf)
              bad = mid;
            else
              hi = mid;
          }
          break;
        }
        hi = cand;
      }
      if (hi - lo < 1e-14) continue;
      double a = lo, b = hi;
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = value_at(x1), f2 = value_at(x2);
      for (int it = 0; it < 60 && b - a > 1e-11 * (1.0 + std::abs(a)); ++it) {
        if (f1 < f2) {  // maximize
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = value_at(x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = value_at(x1);
        }
      }
      const double vmid = 0.5 * (a + b);
      const double fmid = value_at(vmid);
      if (fmid > q_best && fmid != kNegInf) {
        lambda(i) = vmid;
        q_best = fmid;
      }
    }
  }
}

// Pulls a tolerance-feasible point exactly onto the constraint set.  An upper
// bound recorded at a point that still violates some block by ~1e-8 can sit
// below the dual value by multiplier × violation, which reads as a
// weak-duality failure in the trace.  A few Newton steps on each block value
// along its own gradient reach the boundary to machine precision.  Returns
// false (x untouched) when a block gradient degenerates.
inline bool repair_feasibility(const SeparableQcqp& q, Vector& x) {
  Vector y = x;
  for (int i = 0; i < q.num_blocks(); ++i) {
    const BlockConstraint& blk = q.blocks[static_cast<std::size_t>(i)];
    Vector xb = y.segment(q.block_offset(i), q.block_dim(i));
    const bool eq = blk.kind == ConstraintKind::Equality;
    double g = blk.value(xb);
    const double gref = 1.0 + std::abs(g);
    for (int it = 0; it < 8 && (eq ? std::abs(g) > 1e-15 * gref : g > 0.0); ++it) {
      const Vector grad = 2.0 * (blk.A * xb + blk.b);
      const double n2 = grad.squaredNorm();
      if (!(n2 > 1e-30)) return false;
      // Aim slightly inside on inequalities so roundoff cannot push the
      // value back above zero.
      const double target = eq ? 0.0 : -1e-14 * gref;
      xb -= ((g - target) / n2) * grad;
      g = blk.value(xb);
    }
    if (eq ? std::abs(g) > 1e-12 * gref : g > 0.0) return false;
    y.segment(q.block_offset(i), q.block_dim(i)) = xb;
  }
  x = y;
  return true;
}

}  // namespace detail

inline Solution solve_dual_ascent(const SeparableQcqp& q, SolverConfig cfg = {},
                                  const Tolerances& tol = {}) {
  cfg.validate();
  Solution sol;

  // Regularity screen: a block whose constraint cannot reach the required
  // signs makes the instance infeasible or the certificate machinery moot.
  const SlaterReport slater = slater_check(q, tol);
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const auto& br = slater.blocks[static_cast<std::size_t>(i)];
    const bool no_neg = !br.negative_attainable;
    const bool no_pos = !br.positive_attainable;
    if ((blk.kind == ConstraintKind::Inequality && no_neg) ||
        (blk.kind == ConstraintKind::Equality && (no_neg || no_pos))) {
      // Strict sign unreachable; decide between infeasible and merely
      // degenerate by checking whether the weak sign is attainable at all.
      const SymEig e = sym_eig(blk.A);
      const bool bounded_below =
          min_eigenvalue(e) >= -rank_threshold(e) && in_range(e, blk.b);
      const double inf_val =
          bounded_below ? blk.c - blk.b.dot(pinv_apply(e, blk.b)) : kNegInf;
      if (blk.kind == ConstraintKind::Inequality && bounded_below && inf_val > tol.feas) {
        sol.status = SolveStatus::Infeasible;
        sol.note = "blocks[" + std::to_string(i) + "]: constraint minimum " +
                   std::to_string(inf_val) + " is positive; no feasible point exists";
        return sol;
      }
      sol.note += "blocks[" + std::to_string(i) + "]: strict-sign regularity fails; ";
    }
  }

  const ProbeResult probe = strict_feasibility_probe(q, tol, cfg.seed);
  if (!probe.found) sol.note += "strict feasibility probe inconclusive; ";

  const Certificate cert = certify(q, tol);

  // Boundary points of the spectrahedron can have a −inf dual value when b(λ)
  // picks up a nullspace component; nudging such iterates strictly inside by a
  // small eigenvalue margin keeps the dual finite without moving the optimum
  // by more than O(margin).  Boundary points with a finite dual are kept.
  const double w_margin = 100.0 * tol.eig_zero * (1.0 + inf_norm(q.A0));
  const auto interior_fixup = [&](Vector lam) -> Vector {
    if (lagrangian_argmin_full(q, lam, tol).q_value != kNegInf) return lam;
    try {
      Vector pushed = detail::restore_to_W(q, lam, tol, w_margin);
      if (lagrangian_argmin_full(q, pushed, tol).q_value != kNegInf) return pushed;
    } catch (const SpectrahedronEmptyError&) {
      // The margin is unreachable (spectrahedron with empty interior); keep
      // the boundary point and let the subgradient steps search from there.
    }
    return lam;
  };

  Vector lambda;
  try {
    lambda = project_W(q, Vector::Zero(q.num_blocks()), tol);
  } catch (const SpectrahedronEmptyError& e) {
    sol.status = SolveStatus::Unbounded;
    sol.note += std::string("dual domain appears empty (primal likely unbounded below): ") +
                e.what();
    return sol;
  }
  // Start well inside the spectrahedron when its interior allows: at
  // near-singular A(λ) the inner minimizer blows up, which would poison the
  // automatic step scale below.  Escalate down to the thin margin if needed.
  {
    const double s = 1.0 + inf_norm(q.A0);
    for (const double m : {0.25 * s, 0.05 * s, 0.01 * s, 1e-3 * s, w_margin}) {
      try {
        const Vector cand = detail::restore_to_W(q, lambda, tol, m);
        // A start that needed a faraway multiplier is worse than a thin
        // margin: the dual is terrible out there and the ascent would have
        // to walk all the way back.
        if (cand.norm() > 100.0 * (1.0 + lambda.norm() + s)) continue;
        if (lagrangian_argmin_full(q, cand, tol).q_value != kNegInf) {
          lambda = cand;
          break;
        }
      } catch (const SpectrahedronEmptyError&) {
        // Margin unreachable; try a thinner one.
      }
    }
  }

  Vector x = Vector::Zero(q.dim());
  const auto inner_min = [&](const Vector& lam, const Vector& warm) -> Vector {
    switch (cfg.method) {
      case Method::Ascent:
        return lagrangian_argmin_full(q, lam, tol).x;
      case Method::Augmented:
        return augmented_argmin(q, lam, cfg.rho_aug > 0.0 ? cfg.rho_aug : 1.0, warm, cfg, tol).x;
      case Method::Flexa:
        return flexa_inner(q, lam, warm, cfg, tol);
    }
    return warm;
  };

  x = inner_min(lambda, x);
  double mu0 = cfg.mu0;
  if (!(mu0 > 0.0)) mu0 = 1.0 / (1.0 + constraint_values(q, x).norm());
  // Cap on the subgradient norm used per step.  Iterates pushed just inside
  // the spectrahedron can have enormous inner minimizers whose constraint
  // values would otherwise catapult the multiplier.
  const double g_ref = 100.0 * (1.0 + constraint_values(q, x).norm());

  double best_q = kNegInf;
  Vector best_lambda = lambda;
  double f_best_feas = std::numeric_limits<double>::infinity();
  Vector x_best_feas;
  std::deque<double> best_history;
  double step_len = 0.0;

  DualIterate it;
  for (int k = 1; k <= cfg.max_outer; ++k) {
    x = inner_min(lambda, x);
    const Vector g = constraint_values(q, x);
    const LagrangianMin lm = lagrangian_argmin_full(q, lambda, tol);
    const double q_k = lm.q_value;
    Evaluation ev = evaluate(q, x, tol);
    // The incumbent and the trace must come from points that satisfy the
    // constraints exactly, not just within tolerance; see repair_feasibility.
    Vector x_log = x;
    if (ev.feasible && ev.worst_violation > 0.0 && detail::repair_feasibility(q, x_log))
      ev = evaluate(q, x_log, tol);

    if (ev.feasible && ev.objective < f_best_feas) {
      f_best_feas = ev.objective;
      x_best_feas = x_log;
    }
    if (q_k != kNegInf && q_k > best_q) {
      best_q = q_k;
      best_lambda = lambda;
    }

    it = DualIterate{lambda, x, q_k, g, k};

    TraceRow row;
    row.iter = k;
    row.q_lambda = q_k;
    row.primal_f = ev.objective;
    row.gap = f_best_feas - (best_q == kNegInf ? -std::numeric_limits<double>::infinity() : best_q);
    row.min_eig = lm.min_eig;
    row.step = step_len;
    row.feasible = ev.feasible;
    sol.trace.push_back(row);

    double mu = mu0;
    if (cfg.schedule == StepSchedule::InvK)
      mu = mu0 / static_cast<double>(k);
    else if (cfg.schedule == StepSchedule::InvSqrtK)
      mu = mu0 / std::sqrt(static_cast<double>(k));

    Vector lambda_next;
    try {
      Vector dir = g;
      const double gn = dir.norm();
      if (gn > g_ref) dir *= g_ref / gn;
      const Vector lambda_temp = lambda + mu * dir;
      // Fast path: feasibility restoration is projection to second order for
      // the small steps taken here; the public project_W handles cold starts.
      lambda_next = detail::clip_gamma(q, lambda_temp);
      if (detail::min_eig_probe(q, lambda_next).min_eig < -tol.eig_zero)
        lambda_next = detail::restore_to_W(q, lambda_next, tol);
      lambda_next = interior_fixup(lambda_next);
    } catch (const SpectrahedronEmptyError& e) {
      sol.note += std::string("projection failed mid-ascent: ") + e.what() + "; ";
      break;
    }
    step_len = (lambda_next - lambda).norm();
    lambda = lambda_next;

    best_history.push_back(best_q);
    if (static_cast<int>(best_history.size()) > cfg.window + 1) best_history.pop_front();
    if (static_cast<int>(best_history.size()) == cfg.window + 1 &&
        best_q != kNegInf && best_history.front() != kNegInf &&
        best_q - best_history.front() < cfg.gap_tol && step_len < cfg.step_tol)
      break;
  }

  if (best_q == kNegInf) {
    // Never saw a finite dual value; report the best we have.
    sol.status = SolveStatus::StationaryUncertified;
    sol.lambda = lambda;
    sol.x = x_best_feas;
    sol.note += "dual value remained -inf along the whole trajectory; ";
    if (x_best_feas.size() > 0) sol.primal_value = evaluate(q, x_best_feas, tol).objective;
    return sol;
  }

  if (cfg.polish) detail::polish_dual(q, best_lambda, best_q, tol);

  sol.lambda = best_lambda;
  sol.dual_value = best_q;

  const RecoveryResult rec = recover_primal(q, best_lambda, cfg, tol);
  if (rec.found) {
    sol.x = rec.x;
  } else if (x_best_feas.size() > 0) {
    sol.x = x_best_feas;
    sol.note += "recovery: " + rec.note + "; returned the best feasible iterate; ";
  } else {
    sol.note += "recovery: " + rec.note + "; no feasible iterate observed; ";
  }

  if (sol.x.size() > 0) {
    const Evaluation ev = evaluate(q, sol.x, tol);
    sol.primal_value = ev.objective;
    sol.gap = sol.primal_value - sol.dual_value;
    // KKT residual: stationarity, complementarity, feasibility.
    const LagrangianParts parts = assemble_lagrangian(q, best_lambda);
    double kkt = (2.0 * (parts.A * sol.x + parts.b)).cwiseAbs().maxCoeff();
    for (int i = 0; i < q.num_blocks(); ++i)
      if (q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality)
        kkt = std::max(kkt, std::abs(best_lambda(i) * ev.constraints[static_cast<std::size_t>(i)]));
    kkt = std::max(kkt, ev.worst_violation);
    sol.kkt_residual = kkt;
  }

  // Certification thresholds scale with the solution magnitude: the KKT
  // residual carries stationarity terms ~‖A‖·‖x‖ and complementarity products
  // ~λ·g, so an absolute cutoff would misread well-solved larger instances.
  const double kkt_scale = 1.0 + std::abs(sol.dual_value) +
                           (sol.lambda.size() ? sol.lambda.cwiseAbs().maxCoeff() : 0.0);
  const bool certified_global = cert.status == CertStatus::Certified && sol.x.size() > 0 &&
                                std::abs(sol.gap) <= cfg.gap_tol * kkt_scale &&
                                sol.kkt_residual <= std::max(cfg.kkt_tol, 10 * tol.feas) * kkt_scale;
  sol.status = certified_global ? SolveStatus::GlobalCertified
                                : SolveStatus::StationaryUncertified;
  return sol;
}

}  // namespace sepqp
