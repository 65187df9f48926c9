#pragma once

// Rank-1 extraction and lifting.  Given a PSD matrix Y that satisfies the
// homogenized trace system
//
//   trace(F_i Y) = ψ_i  per block,   trace(F0 Y) < 0,
//
// with F_i diagonal (or diagonal off a residual index set M) and a balanced
// signing D, a vector y with the same trace values and yᵀ F0 y ≤ trace(F0 Y)
// can be read off the rows of a square-root factor of Y.  Lifting then maps
// y back to an original-coordinate point x with f(x) < α: directly via
// s = v/w when the homogenizing coordinate w is bounded away from zero, or
// through a divergent curve built from strict-feasibility witnesses when
// w ≈ 0 (diagonal case only).

#include "sepqp/dual.hpp"

namespace sepqp {

struct TraceSystem {
  Matrix Y;                    // (p+1)×(p+1), PSD
  Matrix F0;                   // transformed objective matrix
  std::vector<Matrix> F;       // transformed constraint matrices
  Vector psi;                  // per-block trace targets trace(F_i Y)
  std::vector<Index> M;        // residual column indices (empty in the diagonal case)

  bool in_residual(Index j) const {
    return std::binary_search(M.begin(), M.end(), j);
  }
};

inline TraceSystem make_trace_system(Matrix Y, Matrix F0, std::vector<Matrix> F,
                                     std::vector<Index> M = {},
                                     const Tolerances& tol = {}) {
  const Index n = Y.rows();
  if (Y.cols() != n || F0.rows() != n || F0.cols() != n)
    throw std::invalid_argument("trace system: Y and F0 must be square of equal size");
  if (asymmetry(Y) > tol.sym_rel) throw std::invalid_argument("trace system: Y must be symmetric");
  Y = symmetrize(Y);
  const SymEig e = sym_eig(Y);
  if (min_eigenvalue(e) < -tol.eig_zero * (1.0 + e.values.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("trace system: Y must be positive semidefinite");
  std::sort(M.begin(), M.end());
  TraceSystem sys;
  sys.psi = Vector(static_cast<Index>(F.size()));
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (F[i].rows() != n || F[i].cols() != n)
      throw std::invalid_argument("trace system: constraint matrix size mismatch");
    sys.psi(static_cast<Index>(i)) = (F[i] * Y).trace();
  }
  sys.Y = std::move(Y);
  sys.F0 = std::move(F0);
  sys.F = std::move(F);
  sys.M = std::move(M);
  return sys;
}

// Extracts a vector y from Y = Σ_r w_r w_rᵀ such that yᵀ F_i y equals
// trace(F_i Y) exactly for every block and yᵀ F0 y ≤ trace(F0 Y).
// Coordinates off M combine row norms of the factor with the signing D;
// coordinates in M are anchored to the homogenizing row so that the products
// y_j y_{p+1} reproduce Y_{j,p+1} exactly.
inline Vector extract_rank1(const TraceSystem& sys, const Vector& D) {
  const Index n = sys.Y.rows();
  if (D.size() != n) throw std::invalid_argument("extract_rank1: signing size mismatch");
  for (Index j = 0; j < n; ++j)
    if (std::abs(std::abs(D(j)) - 1.0) > 1e-12)
      throw std::invalid_argument("extract_rank1: signing entries must be ±1");

  const SymEig e = sym_eig(sys.Y);
  Matrix W = e.vectors;  // columns scaled to √(clipped eigenvalue)
  for (Index r = 0; r < n; ++r) W.col(r) *= std::sqrt(std::max(e.values(r), 0.0));

  Vector row_norm2(n);
  for (Index j = 0; j < n; ++j) row_norm2(j) = W.row(j).squaredNorm();

  // A global sign flip leaves every quadratic form unchanged; anchor the
  // homogenizing coordinate's sign to +1 so the M-column formula applies.
  Vector Dn = D(n - 1) < 0.0 ? Vector(-D) : D;

  Vector y(n);
  for (Index j = 0; j < n; ++j) y(j) = Dn(j) * std::sqrt(row_norm2(j));
  if (!sys.M.empty()) {
    const double mass = row_norm2(n - 1);
    const double scale = sys.Y.trace();
    if (mass <= 1e-14 * std::max(scale, 1.0))
      throw Error("extract_rank1: the homogenizing coordinate of Y carries no mass; "
                  "the residual-column extraction cannot be anchored");
    const double root = std::sqrt(mass);
    for (const Index j : sys.M) y(j) = W.row(n - 1).dot(W.row(j)) / root;
  }
  return y;
}

// Cauchy–Schwarz comparison used throughout the extraction argument:
// for rows v_1..v_R of V (coordinates along columns),
//   sqrt(Σ_r v_ri²) · sqrt(Σ_r v_rj²)  ≥  Σ_r v_ri v_rj.
inline bool vector_inequality_check(const Matrix& V, Index i, Index j) {
  if (i < 0 || j < 0 || i >= V.cols() || j >= V.cols())
    throw std::invalid_argument("vector_inequality_check: column index out of range");
  const double lhs = V.col(i).norm() * V.col(j).norm();
  const double rhs = V.col(i).dot(V.col(j));
  return lhs >= rhs - 1e-12;
}

namespace detail {

// Block-local change to transformed coordinates: ŝ_i = P_i⁻¹ (x̂_i − p_i).
inline Vector block_to_transformed(const CongruenceSystem& sys, const SeparableQcqp& q,
                                   int block, const Vector& x_block) {
  const Index off = q.block_offset(block);
  const Index nb = q.block_dim(block);
  const Index p = q.dim();
  return sys.P_inv.block(off, off, nb, nb) * x_block + sys.P_inv.block(off, p, nb, 1);
}

}  // namespace detail

// Maps an extracted vector y (with yᵀF0y < 0 and per-block trace signs) to an
// original-space point x with f(x) < alpha.  When the homogenizing component
// w is safely nonzero this is the direct dehomogenization x = P̄(v/w) + p̄.
// When w ≈ 0 in the fully diagonal case, y encodes a direction along which
// the objective diverges to −∞; a curve s(t) = t·v + Σ_i t_{s,i} ŝ_i built
// from strict-feasibility witnesses stays feasible while f → −∞, and the
// first point on the doubling schedule t ∈ {1, 2, …, 2²⁰} that drops below
// alpha is returned.
inline Vector lift_to_primal(const SeparableQcqp& q, const CongruenceSystem& sys,
                             const Vector& y, double alpha = 0.0,
                             const Tolerances& tol = {}) {
  const Index p = q.dim();
  if (y.size() != p + 1) throw std::invalid_argument("lift_to_primal: y has wrong size");

  const double h0 = y.dot(sys.F0 * y);
  if (!(h0 < 0.0))
    throw std::invalid_argument("lift_to_primal: y does not make the transformed "
                                "objective form negative");
  const double scale = 1.0 + y.squaredNorm();
  for (int i = 0; i < q.num_blocks(); ++i) {
    const double hi = y.dot(sys.F[static_cast<std::size_t>(i)] * y);
    const bool eq = q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Equality;
    const double slack = 1e-7 * scale * (1.0 + inf_norm(sys.F[static_cast<std::size_t>(i)]));
    if ((eq && std::abs(hi) > slack) || (!eq && hi > slack))
      throw std::invalid_argument("lift_to_primal: y violates the transformed "
                                  "constraint sign for blocks[" + std::to_string(i) + "]");
  }

  const double w = y(p);
  if (std::abs(w) > tol.w_split) {
    const Vector s = y.head(p) / w;
    const Vector x = to_original(sys, s);
    const Evaluation ev = evaluate(q, x, tol);
    const double guard = 1e-6 * (1.0 + std::abs(alpha));
    if (ev.worst_violation > std::max(10.0 * tol.feas, 1e-9 * scale) ||
        ev.objective >= alpha + guard)
      throw Error("lift_to_primal: dehomogenized point failed verification "
                  "(objective " + std::to_string(ev.objective) + " vs level " +
                  std::to_string(alpha) + ", violation " +
                  std::to_string(ev.worst_violation) + ")");
    return x;
  }

  if (sys.diag_case == DiagCase::NotDiagonalizable)
    throw Error("lift_to_primal: the homogenizing component vanished in the "
                "residual-column case; no escape construction applies");

  // --- w ≈ 0 escape, fully diagonal case ---
  const Vector v = y.head(p);
  Vector vbar(p + 1);
  vbar << v, 0.0;
  const double c0v = vbar.dot(sys.F0 * vbar);
  if (!(c0v < 0.0))
    throw Error("lift_to_primal: escape direction does not strictly decrease the "
                "transformed objective form");

  const SlaterReport slater = slater_check(q, tol);
  if (!slater.ok)
    throw Error("lift_to_primal: escape construction needs strict-feasibility "
                "witnesses, but a block fails the strict-sign check");

  struct BlockData {
    Vector d;        // diagonal of the transformed constraint on the block
    double corner;   // transformed constant term ē_i
    double cv;       // Σ d_j v_j² on the block
    Vector v;        // v restricted to the block
    Vector s_neg, s_pos;  // transformed witnesses (positive only for equalities)
  };
  std::vector<BlockData> bd(static_cast<std::size_t>(q.num_blocks()));
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const Index off = q.block_offset(i);
    const Matrix& Fi = sys.F[static_cast<std::size_t>(i)];
    BlockData& b = bd[static_cast<std::size_t>(i)];
    b.d = Fi.diagonal().segment(off, blk.dim());
    b.corner = Fi(p, p);
    b.v = v.segment(off, blk.dim());
    b.cv = b.v.dot(b.d.asDiagonal() * b.v);
    const auto& sb = slater.blocks[static_cast<std::size_t>(i)];
    b.s_neg = detail::block_to_transformed(sys, q, i, *sb.witness_negative);
    if (blk.kind == ConstraintKind::Equality)
      b.s_pos = detail::block_to_transformed(sys, q, i, *sb.witness_positive);
  }

  auto block_value = [&](int i, const Vector& s_block) {
    const BlockData& b = bd[static_cast<std::size_t>(i)];
    return s_block.dot(b.d.asDiagonal() * s_block) + b.corner;
  };

  std::string diag;
  for (int pow2 = 0; pow2 <= 20; ++pow2) {
    const double tv = static_cast<double>(1u << pow2);
    Vector s = tv * v;
    bool blocks_ok = true;
    for (int i = 0; i < q.num_blocks() && blocks_ok; ++i) {
      const auto& blk = q.blocks[static_cast<std::size_t>(i)];
      const BlockData& b = bd[static_cast<std::size_t>(i)];
      const Index off = q.block_offset(i);
      const double accept = tol.feas * (1.0 + std::abs(b.corner));
      bool placed = false;

      if (blk.kind == ConstraintKind::Inequality) {
        const double bq = (b.d.asDiagonal() * b.s_neg).dot(b.v);
        const double signed_t = bq >= 0.0 ? -1.0 : 1.0;
        for (const double ts : {signed_t, 0.0, -signed_t}) {
          const Vector cand = tv * b.v + ts * b.s_neg;
          if (block_value(i, cand) <= accept) {
            s.segment(off, blk.dim()) = cand;
            placed = true;
            break;
          }
        }
      } else {
        // Equality block: the escape must keep g exactly zero.  Two branches
        // depending on whether v lies in the nullspace of the block form.
        const double null_gauge =
            (b.d.cwiseProduct(b.v)).cwiseAbs().maxCoeff() <=
                    1e-10 * (1.0 + b.d.cwiseAbs().maxCoeff()) * (1.0 + b.v.cwiseAbs().maxCoeff())
                ? 1.0
                : 0.0;
        std::vector<std::pair<const Vector*, double>> cands;  // witness, t_s
        if (null_gauge == 1.0) {
          if (std::abs(b.corner) <= accept) {
            cands.push_back({&b.s_neg, 0.0});
          } else {
            for (const Vector* wv : {&b.s_pos, &b.s_neg}) {
              const double a = wv->dot(b.d.asDiagonal() * (*wv));
              if (std::abs(a) > 1e-14) {
                const double ratio = -b.corner / a;
                if (ratio >= 0.0) cands.push_back({wv, std::sqrt(ratio)});
              }
            }
          }
        } else {
          for (const Vector* wv : {&b.s_neg, &b.s_pos}) {
            const double a = wv->dot(b.d.asDiagonal() * (*wv));
            const double bq = (b.d.asDiagonal() * (*wv)).dot(b.v);
            const double C = b.cv * tv * tv + b.corner;
            if (std::abs(a) <= 1e-14) {
              if (std::abs(bq) * tv > 1e-14) cands.push_back({wv, -C / (2.0 * bq * tv)});
              else if (std::abs(C) <= accept) cands.push_back({wv, 0.0});
              continue;
            }
            const double B = 2.0 * bq * tv;
            const double disc = B * B - 4.0 * a * C;
            if (disc < 0.0) continue;
            const double r1 = (-B - std::sqrt(disc)) / (2.0 * a);
            const double r2 = (-B + std::sqrt(disc)) / (2.0 * a);
            const double small = std::abs(r1) <= std::abs(r2) ? r1 : r2;
            const double large = std::abs(r1) <= std::abs(r2) ? r2 : r1;
            cands.push_back({wv, small});
            cands.push_back({wv, large});
          }
        }
        for (const auto& [wv, ts] : cands) {
          const Vector cand = tv * b.v + ts * (*wv);
          if (std::abs(block_value(i, cand)) <= accept) {
            s.segment(off, blk.dim()) = cand;
            placed = true;
            break;
          }
        }
      }
      if (!placed) {
        blocks_ok = false;
        diag = "blocks[" + std::to_string(i) + "] admitted no feasible coefficient at t=" +
               std::to_string(tv);
      }
    }
    if (!blocks_ok) continue;
    const Vector x = to_original(sys, s);
    const Evaluation ev = evaluate(q, x, tol);
    if (ev.feasible && ev.objective < alpha) return x;
    diag = "objective " + std::to_string(ev.objective) + " vs level " + std::to_string(alpha) +
           ", violation " + std::to_string(ev.worst_violation) + " at t=" + std::to_string(tv);
  }
  throw Error("lift_to_primal: escape schedule exhausted without certifying a point "
              "below the level (" + diag + ")");
}

}  // namespace sepqp
