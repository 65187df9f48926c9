#pragma once

// Problem representation: a quadratic objective over block-separable
// quadratic constraints, one block per constraint.  Variables are split as
// x = (x_1, ..., x_N) with block i of size n_i and p = sum n_i.
//
//   minimize  xᵀ A0 x + 2 b0ᵀ x + c0
//   s.t.      x_iᵀ A_i x_i + 2 b_iᵀ x_i + c_i  <= 0   (inequality block)
//                                              == 0   (equality block)
//
// The objective may couple blocks; each constraint touches only its own
// block.  This header owns validation, evaluation, the homogenized
// (p+1)x(p+1) matrices, and the strict-sign attainability probe used as a
// precondition by the certification and dual modules.

#include "sepqp/linalg.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sepqp {

enum class ConstraintKind { Inequality, Equality };

inline const char* to_string(ConstraintKind k) {
  return k == ConstraintKind::Inequality ? "ineq" : "eq";
}

struct BlockConstraint {
  Matrix A;  // n_i x n_i, symmetric
  Vector b;  // n_i
  double c = 0.0;
  ConstraintKind kind = ConstraintKind::Inequality;

  Index dim() const { return A.rows(); }
  double value(const Vector& xi) const {
    return xi.dot(A * xi) + 2.0 * b.dot(xi) + c;
  }
};

namespace detail {

inline void check_matrix(Matrix& a, Index rows, Index cols, double sym_rel,
                         const std::string& where) {
  if (a.rows() != rows || a.cols() != cols) {
    std::ostringstream os;
    os << where << ": expected " << rows << "x" << cols << ", got " << a.rows()
       << "x" << a.cols();
    throw std::invalid_argument(os.str());
  }
  if (!all_finite(a))
    throw std::invalid_argument(where + ": contains NaN or Inf");
  if (rows == cols && rows > 0) {
    if (asymmetry(a) > sym_rel)
      throw std::invalid_argument(where + ": matrix is not symmetric");
    a = symmetrize(a);
  }
}

}  // namespace detail

class SeparableQcqp {
 public:
  Matrix A0;  // p x p, symmetric (may couple blocks)
  Vector b0;  // p
  double c0 = 0.0;
  std::vector<BlockConstraint> blocks;

  // Validates dimensions and symmetry, symmetrizes near-symmetric inputs,
  // rejects non-finite entries.  Error messages carry the offending field.
  static SeparableQcqp create(Matrix A0, Vector b0, double c0,
                              std::vector<BlockConstraint> blocks,
                              const Tolerances& tol = {}) {
    if (blocks.empty()) throw std::invalid_argument("blocks: at least one constraint block is required");
    Index p = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      auto& blk = blocks[i];
      const std::string where = "blocks[" + std::to_string(i) + "]";
      if (blk.A.rows() < 1) throw std::invalid_argument(where + ".A: empty block");
      detail::check_matrix(blk.A, blk.A.rows(), blk.A.rows(), tol.sym_rel, where + ".A");
      if (blk.b.size() != blk.A.rows())
        throw std::invalid_argument(where + ".b: size does not match A");
      if (!blk.b.allFinite() || !std::isfinite(blk.c))
        throw std::invalid_argument(where + ": contains NaN or Inf");
      p += blk.A.rows();
    }
    detail::check_matrix(A0, p, p, tol.sym_rel, "A0");
    if (b0.size() != p) throw std::invalid_argument("b0: size does not match the total block dimension");
    if (!b0.allFinite() || !std::isfinite(c0))
      throw std::invalid_argument("objective: contains NaN or Inf");

    SeparableQcqp q;
    q.A0 = std::move(A0);
    q.b0 = std::move(b0);
    q.c0 = c0;
    q.blocks = std::move(blocks);
    q.offsets_.resize(q.blocks.size());
    Index off = 0;
    for (std::size_t i = 0; i < q.blocks.size(); ++i) {
      q.offsets_[i] = off;
      off += q.blocks[i].dim();
    }
    q.dim_ = off;
    return q;
  }

  Index dim() const { return dim_; }
  int num_blocks() const { return static_cast<int>(blocks.size()); }
  Index block_offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  Index block_dim(int i) const { return blocks[static_cast<std::size_t>(i)].dim(); }

  Eigen::VectorBlock<const Vector> block_of(const Vector& x, int i) const {
    return x.segment(block_offset(i), block_dim(i));
  }

  double objective(const Vector& x) const {
    return x.dot(A0 * x) + 2.0 * b0.dot(x) + c0;
  }
  double constraint(const Vector& x, int i) const {
    return blocks[static_cast<std::size_t>(i)].value(block_of(x, i));
  }

  // Embeds a block matrix/vector into full p-dimensional coordinates.
  Matrix embed(const Matrix& Ai, int i) const {
    Matrix out = Matrix::Zero(dim_, dim_);
    out.block(block_offset(i), block_offset(i), block_dim(i), block_dim(i)) = Ai;
    return out;
  }
  Vector embed(const Vector& bi, int i) const {
    Vector out = Vector::Zero(dim_);
    out.segment(block_offset(i), block_dim(i)) = bi;
    return out;
  }

 private:
  std::vector<Index> offsets_;
  Index dim_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct Evaluation {
  double objective = 0.0;
  std::vector<double> constraints;
  bool feasible = false;
  double worst_violation = 0.0;  // max over blocks of the constraint violation
};

inline Evaluation evaluate(const SeparableQcqp& q, const Vector& x,
                           const Tolerances& tol = {}) {
  if (x.size() != q.dim())
    throw std::invalid_argument("x: size does not match the problem dimension");
  Evaluation ev;
  ev.objective = q.objective(x);
  ev.constraints.resize(static_cast<std::size_t>(q.num_blocks()));
  ev.worst_violation = 0.0;
  for (int i = 0; i < q.num_blocks(); ++i) {
    const double g = q.constraint(x, i);
    ev.constraints[static_cast<std::size_t>(i)] = g;
    const double viol =
        q.blocks[static_cast<std::size_t>(i)].kind == ConstraintKind::Inequality
            ? std::max(g, 0.0)
            : std::abs(g);
    ev.worst_violation = std::max(ev.worst_violation, viol);
  }
  ev.feasible = ev.worst_violation <= tol.feas;
  return ev;
}

// ---------------------------------------------------------------------------
// Homogenized matrices
// ---------------------------------------------------------------------------
// Abar packs a quadratic q(x) = xᵀAx + 2bᵀx + c into one symmetric matrix so
// that (xᵀ 1) Abar (x;1) = q(x).  The corner marker E has a single unit entry
// in the bottom-right corner.

struct ExtendedMatrices {
  Matrix Abar0;              // (p+1) x (p+1)
  std::vector<Matrix> Abar;  // block-embedded constraints, same size
  Matrix E;                  // unit entry at (p+1, p+1)
};

inline Matrix make_extended(const Matrix& A, const Vector& b, double c) {
  const Index p = A.rows();
  Matrix out(p + 1, p + 1);
  out.topLeftCorner(p, p) = A;
  out.topRightCorner(p, 1) = b;
  out.bottomLeftCorner(1, p) = b.transpose();
  out(p, p) = c;
  return out;
}

inline ExtendedMatrices assemble_extended(const SeparableQcqp& q) {
  ExtendedMatrices ext;
  const Index p = q.dim();
  ext.Abar0 = make_extended(q.A0, q.b0, q.c0);
  ext.Abar.reserve(q.blocks.size());
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    ext.Abar.push_back(make_extended(q.embed(blk.A, i), q.embed(blk.b, i), blk.c));
  }
  ext.E = Matrix::Zero(p + 1, p + 1);
  ext.E(p, p) = 1.0;
  return ext;
}

// ---------------------------------------------------------------------------
// Strict-sign attainability (per-block regularity probe)
// ---------------------------------------------------------------------------
// For each block the certification argument needs points where the
// constraint takes strictly negative — and for equality blocks also strictly
// positive — values.  Each block is a small unconstrained quadratic, so both
// questions have a complete spectral answer: either the quadratic is
// unbounded in the wanted direction (negative curvature, or a linear term
// with a nullspace component) or its extremum is attained at a stationary
// point and the sign of the extremal value decides.

struct SlaterBlockReport {
  bool negative_attainable = false;
  bool positive_attainable = false;
  std::optional<Vector> witness_negative;  // block coordinates, g < 0 there
  std::optional<Vector> witness_positive;  // block coordinates, g > 0 there
};

struct SlaterReport {
  std::vector<SlaterBlockReport> blocks;
  bool ok = false;  // every block has the signs its kind requires
  std::vector<std::string> failures;
};

namespace detail {

// Point with A x² + 2bx + c strictly below zero, or nullopt if inf g >= 0.
inline std::optional<Vector> strict_negative_point(const Matrix& A, const Vector& b,
                                                   double c) {
  const SymEig e = sym_eig(A);
  const double tau = rank_threshold(e);
  auto g = [&](const Vector& x) { return x.dot(A * x) + 2.0 * b.dot(x) + c; };
  auto escape = [&](Vector dir) -> std::optional<Vector> {
    // Push along dir, doubling, until the value is strictly negative.
    if (dir.norm() == 0.0) return std::nullopt;
    dir.normalize();
    double t = 1.0;
    for (int k = 0; k < 80; ++k, t *= 2.0) {
      if (g(t * dir) < 0.0) return t * dir;
      if (g(-t * dir) < 0.0) return -t * dir;
    }
    return std::nullopt;
  };

  if (min_eigenvalue(e) < -tau) {
    // Negative curvature direction: g(t v) -> -inf.
    if (auto w = escape(e.vectors.col(0))) return w;
  }
  const Vector b_null = range_residual(e, b, tau);
  if (!in_range(e, b, tau)) {
    // A ⪰ 0 but b leaks into the nullspace: g(-t b_null) = -2t‖b_null‖² + c.
    if (auto w = escape(-b_null)) return w;
  }
  // Bounded below: the minimum sits at the stationary point -A†b.
  const Vector xstar = -pinv_apply(e, b, tau);
  if (g(xstar) < 0.0) return xstar;
  return std::nullopt;
}

}  // namespace detail

inline SlaterReport slater_check(const SeparableQcqp& q, const Tolerances& = {}) {
  SlaterReport rep;
  rep.blocks.resize(q.blocks.size());
  rep.ok = true;
  for (int i = 0; i < q.num_blocks(); ++i) {
    const auto& blk = q.blocks[static_cast<std::size_t>(i)];
    auto& br = rep.blocks[static_cast<std::size_t>(i)];
    br.witness_negative = detail::strict_negative_point(blk.A, blk.b, blk.c);
    br.negative_attainable = br.witness_negative.has_value();
    // sup g = -inf(-g): reuse the same analysis on the negated quadratic.
    br.witness_positive = detail::strict_negative_point(-blk.A, -blk.b, -blk.c);
    br.positive_attainable = br.witness_positive.has_value();
    const bool need_pos = blk.kind == ConstraintKind::Equality;
    if (!br.negative_attainable || (need_pos && !br.positive_attainable)) {
      rep.ok = false;
      std::ostringstream os;
      os << "blocks[" << i << "]: no strictly "
         << (!br.negative_attainable ? "negative" : "positive")
         << " value exists for the constraint";
      rep.failures.push_back(os.str());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Solver-facing result types (shared by the dual and oracle modules)
// ---------------------------------------------------------------------------

enum class SolveStatus { GlobalCertified, StationaryUncertified, Infeasible, Unbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::GlobalCertified: return "GlobalCertified";
    case SolveStatus::StationaryUncertified: return "StationaryUncertified";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct TraceRow {
  int iter = 0;
  double q_lambda = 0.0;   // dual value at the current multiplier
  double primal_f = 0.0;   // objective at the current inner minimizer
  double gap = 0.0;        // best feasible objective minus best dual value
  double min_eig = 0.0;    // smallest eigenvalue of the slack matrix
  double step = 0.0;       // multiplier step length just taken
  bool feasible = false;   // inner minimizer satisfies the constraints
};

struct Solution {
  SolveStatus status = SolveStatus::StationaryUncertified;
  Vector x;             // recovered primal point (may be empty on failure)
  Vector lambda;        // best dual multiplier
  double primal_value = std::numeric_limits<double>::quiet_NaN();
  double dual_value = kNegInf;
  double gap = std::numeric_limits<double>::infinity();
  double kkt_residual = std::numeric_limits<double>::infinity();
  std::vector<TraceRow> trace;
  std::string note;  // human-readable diagnostics (recovery fallbacks etc.)
};

}  // namespace sepqp
