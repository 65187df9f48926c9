#pragma once

// Shared dense linear-algebra helpers: symmetric eigendecompositions,
// pseudo-inverse solves with a consistent rank cutoff, range tests and
// nullspace bases.  Everything downstream (congruence transforms, dual
// ascent, recovery) routes its rank decisions through this header so the
// zero/nonzero conventions stay in one place.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepqp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Library-level failure (numerical breakdown, contract violation at runtime).
// Bad user input (malformed files, inconsistent dimensions) throws
// std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Central numeric knobs.  Defaults are what the CLI and the test suite use.
struct Tolerances {
  double sym_rel = 1e-8;      // max relative asymmetry accepted on ingest
  double feas = 1e-8;         // feasibility tolerance on constraint values
  double eig_zero = 1e-9;     // zero band for eigenvalue sign counts
  double offdiag_rel = 1e-9;  // residual coupling threshold, scaled by (1+max|entry|)
  double proj = 1e-7;         // spectrahedron projection fixed-point tolerance
  double w_split = 1e-7;      // threshold separating the two lifting branches
};

inline double inf_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

// Relative asymmetry ‖A − Aᵀ‖_max / max(1, ‖A‖_max).
inline double asymmetry(const Matrix& a) {
  return inf_norm(a - a.transpose()) / std::max(1.0, inf_norm(a));
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition with shared rank conventions
// ---------------------------------------------------------------------------

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, A = V diag(values) Vᵀ
  Index dim() const { return values.size(); }
};

inline SymEig sym_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Eigenvalues with |value| <= rank_threshold count as zero everywhere:
// pseudo-inverses, nullspace bases, range tests.
inline double rank_threshold(const SymEig& e) {
  const double smax = e.dim() == 0 ? 0.0 : e.values.cwiseAbs().maxCoeff();
  return static_cast<double>(e.dim()) * smax * 1e-12;
}

inline double min_eigenvalue(const SymEig& e) {
  return e.dim() == 0 ? 0.0 : e.values(0);
}

// A† b using the shared cutoff.
inline Vector pinv_apply(const SymEig& e, const Vector& b, double tau) {
  Vector c = e.vectors.transpose() * b;
  for (Index i = 0; i < c.size(); ++i)
    c(i) = std::abs(e.values(i)) > tau ? c(i) / e.values(i) : 0.0;
  return e.vectors * c;
}

inline Vector pinv_apply(const SymEig& e, const Vector& b) {
  return pinv_apply(e, b, rank_threshold(e));
}

inline Matrix pinv(const SymEig& e, double tau) {
  Matrix out = Matrix::Zero(e.dim(), e.dim());
  for (Index i = 0; i < e.dim(); ++i)
    if (std::abs(e.values(i)) > tau)
      out += (1.0 / e.values(i)) * e.vectors.col(i) * e.vectors.col(i).transpose();
  return out;
}

inline Matrix pinv(const SymEig& e) { return pinv(e, rank_threshold(e)); }

// Component of b orthogonal to range(A), i.e. (I − A A†) b.
inline Vector range_residual(const SymEig& e, const Vector& b, double tau) {
  Vector c = e.vectors.transpose() * b;
  Vector res = Vector::Zero(b.size());
  for (Index i = 0; i < c.size(); ++i)
    if (std::abs(e.values(i)) <= tau) res += c(i) * e.vectors.col(i);
  return res;
}

// b ∈ range(A)?  The residual is allowed rounding noise proportional to the
// problem scale; a zero matrix admits only b = 0.
inline bool in_range(const SymEig& e, const Vector& b, double tau) {
  const double smax = e.dim() == 0 ? 0.0 : e.values.cwiseAbs().maxCoeff();
  const double allow =
      static_cast<double>(std::max<Index>(e.dim(), 1)) * 1e-12 * (smax + b.norm());
  return range_residual(e, b, tau).norm() <= allow;
}

inline bool in_range(const SymEig& e, const Vector& b) {
  return in_range(e, b, rank_threshold(e));
}

// Orthonormal basis of the nullspace (eigenvectors with |value| <= tau).
inline Matrix nullspace_basis(const SymEig& e, double tau) {
  std::vector<Index> idx;
  for (Index i = 0; i < e.dim(); ++i)
    if (std::abs(e.values(i)) <= tau) idx.push_back(i);
  Matrix out(e.dim(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = e.vectors.col(idx[k]);
  return out;
}

inline Matrix nullspace_basis(const SymEig& e) {
  return nullspace_basis(e, rank_threshold(e));
}

// Signature of a symmetric matrix with an explicit zero band.
struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
  bool operator==(const Inertia&) const = default;
};

inline Inertia count_inertia(const SymEig& e, double tau_zero) {
  Inertia n;
  for (Index i = 0; i < e.dim(); ++i) {
    if (e.values(i) > tau_zero)
      ++n.positive;
    else if (e.values(i) < -tau_zero)
      ++n.negative;
    else
      ++n.zero;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Deterministic random draws
// ---------------------------------------------------------------------------
// Seeded sampling used by generators, probes and multistarts.  Distributions
// are implemented directly on top of mt19937_64 so that a given seed yields
// the same stream regardless of standard-library internals.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }
  double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  // Haar-ish random orthogonal matrix via QR of a Gaussian draw.
  Matrix orthogonal(Index n) {
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) g(i, j) = normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sepqp
