#pragma once

// Block congruence transform.  Each constraint block contributes
// P_i = Q_i S_i (Q_i eigenvectors of A_i, S_i the pseudo-inverse square root
// of the eigenvalue matrix with unit entries on zero eigenvalues) and a
// translation p_i = -A_i† b_i.  Assembled into
//
//       P = [ blkdiag(P_1..P_N)  p ]        p = (p_1; ...; p_N)
//           [ 0                  1 ]
//
// the transform turns every homogenized constraint matrix Abar_i into
// F_i = Pᵀ Abar_i P whose block part is diagonal with entries in {−1,0,+1}.
// When some b_i leaves range(A_i), F_i keeps residual entries in its last
// column; the affected row indices form the set M and the instance is
// classified NotDiagonalizable.  The transformed objective is
// F0 = Pᵀ (Abar0 − alpha·E) P.

#include "sepqp/model.hpp"

namespace sepqp {

enum class DiagCase { Diagonalizable, NotDiagonalizable };

struct CongruenceSystem {
  Matrix P;      // (p+1) x (p+1), invertible by construction
  Matrix P_inv;  // exact-structure inverse (block inverse, not a generic solve)
  Matrix F0;
  std::vector<Matrix> F;
  DiagCase diag_case = DiagCase::Diagonalizable;
  std::vector<Index> residual;  // M: row indices (0-based, < p) with last-column entries
  double alpha = 0.0;

  bool in_residual(Index j) const {
    for (Index m : residual)
      if (m == j) return true;
    return false;
  }
};

// Residual-coupling threshold for a given matrix scale.
inline double offdiag_threshold(const Matrix& a, const Tolerances& tol = {}) {
  return tol.offdiag_rel * (1.0 + inf_norm(a));
}

inline CongruenceSystem build_congruence(const SeparableQcqp& q,
                                         const ExtendedMatrices& ext,
                                         double alpha = 0.0,
                                         const Tolerances& tol = {}) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha: not finite");
  const Index p = q.dim();

  CongruenceSystem sys;
  sys.alpha = alpha;
  sys.P = Matrix::Zero(p + 1, p + 1);
  sys.P_inv = Matrix::Zero(p + 1, p + 1);
  sys.P(p, p) = 1.0;
  sys.P_inv(p, p) = 1.0;
  sys.diag_case = DiagCase::Diagonalizable;

  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    const Index n = blk.dim();
    const Index off = q.block_offset(i);
    const SymEig e = sym_eig(blk.A);
    const double tau = rank_threshold(e);

    // Scaling 1/sqrt(|delta|) on nonzero eigenvalues; 1 on zero ones so P
    // stays invertible (those directions carry no quadratic weight anyway).
    Vector scale(n), scale_inv(n);
    for (Index j = 0; j < n; ++j) {
      if (std::abs(e.values(j)) > tau) {
        scale(j) = 1.0 / std::sqrt(std::abs(e.values(j)));
        scale_inv(j) = std::sqrt(std::abs(e.values(j)));
      } else {
        scale(j) = 1.0;
        scale_inv(j) = 1.0;
      }
    }
    const Matrix Pi = e.vectors * scale.asDiagonal();
    const Matrix Pi_inv = scale_inv.asDiagonal() * e.vectors.transpose();
    const Vector pi = -pinv_apply(e, blk.b, tau);

    sys.P.block(off, off, n, n) = Pi;
    sys.P.block(off, p, n, 1) = pi;
    sys.P_inv.block(off, off, n, n) = Pi_inv;
    sys.P_inv.block(off, p, n, 1) = -Pi_inv * pi;

    if (!in_range(e, blk.b, tau)) sys.diag_case = DiagCase::NotDiagonalizable;
  }

  sys.F0 = symmetrize(sys.P.transpose() * (ext.Abar0 - alpha * ext.E) * sys.P);
  sys.F.reserve(ext.Abar.size());
  for (std::size_t i = 0; i < ext.Abar.size(); ++i) {
    Matrix Fi = symmetrize(sys.P.transpose() * ext.Abar[i] * sys.P);
    const double tau_off = offdiag_threshold(ext.Abar[i], tol);
    for (Index j = 0; j < p; ++j)
      if (std::abs(Fi(j, p)) > tau_off && !sys.in_residual(j))
        sys.residual.push_back(j);
    sys.F.push_back(std::move(Fi));
  }
  std::sort(sys.residual.begin(), sys.residual.end());
  return sys;
}

inline CongruenceSystem build_congruence(const SeparableQcqp& q, double alpha = 0.0,
                                         const Tolerances& tol = {}) {
  return build_congruence(q, assemble_extended(q), alpha, tol);
}

// Eigenvalue sign counts with a zero band.  Congruent matrices must agree.
inline Inertia inertia(const Matrix& s, double tau_zero = 1e-9) {
  if (s.rows() != s.cols()) throw std::invalid_argument("inertia: matrix must be square");
  if (asymmetry(s) > 1e-8) throw std::invalid_argument("inertia: matrix must be symmetric");
  return count_inertia(sym_eig(symmetrize(s)), tau_zero);
}

// Maps a point between original and transformed coordinates:
//   (x; 1) = P (s; 1)  and  (s; 1) = P_inv (x; 1).
inline Vector to_original(const CongruenceSystem& sys, const Vector& s) {
  const Index p = sys.P.rows() - 1;
  if (s.size() != p) throw std::invalid_argument("s: size does not match");
  return sys.P.topLeftCorner(p, p) * s + sys.P.topRightCorner(p, 1);
}

inline Vector to_transformed(const CongruenceSystem& sys, const Vector& x) {
  const Index p = sys.P.rows() - 1;
  if (x.size() != p) throw std::invalid_argument("x: size does not match");
  return sys.P_inv.topLeftCorner(p, p) * x + sys.P_inv.topRightCorner(p, 1);
}

}  // namespace sepqp
