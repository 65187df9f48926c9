#pragma once

// Seeded instance families for tests, demos, and benchmarks.  Every family
// is deterministic in (kind, seed, dims): the same inputs reproduce the same
// problem bit for bit.

#include "sepqp/rls.hpp"

namespace sepqp {

enum class InstanceKind {
  CertifiedCase1,       // diagonal certificate holds with a balanced signing
  CertifiedCase2,       // residual-column certificate (linear blocks)
  OddCycleUncertified,  // sign search hits an odd positive cycle
  Convex,               // PSD data; zero gap regardless of the certificate
  RlsToy                // inner standard form of a small robust-LS instance
};

inline const char* to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::CertifiedCase1: return "certified_case1";
    case InstanceKind::CertifiedCase2: return "certified_case2";
    case InstanceKind::OddCycleUncertified: return "odd_cycle_uncertified";
    case InstanceKind::Convex: return "convex";
    case InstanceKind::RlsToy: return "rls_toy";
  }
  return "?";
}

inline InstanceKind parse_instance_kind(const std::string& name) {
  for (const InstanceKind k :
       {InstanceKind::CertifiedCase1, InstanceKind::CertifiedCase2,
        InstanceKind::OddCycleUncertified, InstanceKind::Convex, InstanceKind::RlsToy})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown instance kind: " + name);
}

namespace detail {

inline std::vector<Index> split_dims(Rng& rng, int p, int N) {
  std::vector<Index> sizes(static_cast<std::size_t>(N), 1);
  for (int extra = 0; extra < p - N; ++extra)
    sizes[static_cast<std::size_t>(rng.uniform_int(0, N - 1))] += 1;
  return sizes;
}

// Positive-definite block with a strictly negative reachable value:
// g(x) = (x−z)ᵀA(x−z) + level with level < 0 at the center z.
inline BlockConstraint pd_block(Rng& rng, Index n, bool equality) {
  const Matrix Q = rng.orthogonal(n);
  Vector delta(n);
  for (Index j = 0; j < n; ++j) delta(j) = rng.uniform(0.5, 2.0);
  BlockConstraint blk;
  blk.A = symmetrize(Q * delta.asDiagonal() * Q.transpose());
  const Vector z = 0.5 * rng.normal_vector(n);
  blk.b = -blk.A * z;
  const double level = rng.uniform(-2.0, -0.5);
  blk.c = level + z.dot(blk.A * z);
  blk.kind = equality ? ConstraintKind::Equality : ConstraintKind::Inequality;
  return blk;
}

}  // namespace detail

// Builds the instance backwards from its transformed objective matrix: pick
// positive-definite blocks, a Z-matrix G and a signing D, set F0 = D G D,
// and pull F0 back through the inverse congruence.  The balanced signing
// then exists by construction, so the diagonal certificate always passes.
inline SeparableQcqp generate_certified_case1(std::uint64_t seed, int p = 4, int N = 2) {
  Rng rng(seed ^ 0xc1a55e01ULL);
  const std::vector<Index> sizes = detail::split_dims(rng, p, N);
  std::vector<BlockConstraint> blocks;
  blocks.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    blocks.push_back(detail::pd_block(rng, sizes[static_cast<std::size_t>(i)],
                                      rng.uniform() < 0.35));

  // Transform of the constraint side only; the objective data is defined by
  // pulling F0 back, so any placeholder objective works here.
  const SeparableQcqp shell =
      SeparableQcqp::create(Matrix::Zero(p, p), Vector::Zero(p), 0.0, blocks);
  const CongruenceSystem sys = build_congruence(shell);

  Matrix G = Matrix::Zero(p + 1, p + 1);
  for (Index j = 0; j <= p; ++j) G(j, j) = rng.uniform(-0.6, 1.2);
  for (Index j = 0; j <= p; ++j)
    for (Index k = j + 1; k <= p; ++k)
      if (rng.uniform() < 0.5) {
        G(j, k) = -rng.uniform(0.1, 0.8);
        G(k, j) = G(j, k);
      }
  Vector D(p + 1);
  for (Index j = 0; j <= p; ++j) D(j) = rng.sign();
  const Matrix F0 = D.asDiagonal() * G * D.asDiagonal();

  const Matrix Abar0 = sys.P_inv.transpose() * F0 * sys.P_inv;
  return SeparableQcqp::create(symmetrize(Abar0.topLeftCorner(p, p)),
                               Abar0.block(0, p, p, 1), Abar0(p, p), std::move(blocks));
}

// Linear constraint blocks (zero Hessians) put every block coordinate in the
// residual set; a per-block multiple of the identity as the objective Hessian
// keeps the residual rows decoupled under any eigenbasis of the zero matrix.
inline SeparableQcqp generate_certified_case2(std::uint64_t seed, int p = 4, int N = 2) {
  Rng rng(seed ^ 0xc1a55e02ULL);
  const std::vector<Index> sizes = detail::split_dims(rng, p, N);
  std::vector<BlockConstraint> blocks;
  Matrix A0 = Matrix::Zero(p, p);
  Index off = 0;
  for (int i = 0; i < N; ++i) {
    const Index n = sizes[static_cast<std::size_t>(i)];
    BlockConstraint blk;
    blk.A = Matrix::Zero(n, n);
    blk.b = Vector(n);
    for (Index j = 0; j < n; ++j) {
      double v = rng.normal();
      if (std::abs(v) < 0.3) v = v >= 0.0 ? 0.3 : -0.3;
      blk.b(j) = v;
    }
    blk.c = rng.uniform(-1.5, -0.5);
    blk.kind = rng.uniform() < 0.35 ? ConstraintKind::Equality : ConstraintKind::Inequality;
    blocks.push_back(std::move(blk));
    A0.block(off, off, n, n) = rng.uniform(0.4, 2.0) * Matrix::Identity(n, n);
    off += n;
  }
  return SeparableQcqp::create(std::move(A0), 0.3 * rng.normal_vector(p),
                               rng.uniform(-1.0, 1.0), std::move(blocks));
}

// Three unit-ball blocks coupled by a positive off-diagonal triangle: the
// signing graph is an odd positive cycle, so certification must decline, and
// the instance carries a genuine positive duality gap.
inline SeparableQcqp generate_odd_cycle(std::uint64_t seed) {
  Rng rng(seed ^ 0xc1a55e03ULL);
  Matrix A0 = Matrix::Zero(3, 3);
  for (Index j = 0; j < 3; ++j)
    for (Index k = j + 1; k < 3; ++k) {
      A0(j, k) = rng.uniform(0.6, 1.4);
      A0(k, j) = A0(j, k);
    }
  std::vector<BlockConstraint> blocks;
  for (int i = 0; i < 3; ++i) {
    BlockConstraint blk;
    blk.A = Matrix::Identity(1, 1);
    blk.b = Vector::Zero(1);
    const double r = rng.uniform(0.8, 1.2);
    blk.c = -r * r;
    blk.kind = ConstraintKind::Inequality;
    blocks.push_back(std::move(blk));
  }
  return SeparableQcqp::create(std::move(A0), Vector::Zero(3), 0.0, std::move(blocks));
}

// Fully convex: PSD objective, inequality balls.  Strong duality holds by
// convexity whether or not the sign search happens to succeed.
inline SeparableQcqp generate_convex(std::uint64_t seed, int p = 4, int N = 2) {
  Rng rng(seed ^ 0xc1a55e04ULL);
  const std::vector<Index> sizes = detail::split_dims(rng, p, N);
  std::vector<BlockConstraint> blocks;
  for (int i = 0; i < N; ++i)
    blocks.push_back(detail::pd_block(rng, sizes[static_cast<std::size_t>(i)], false));
  const Matrix Q0 = rng.orthogonal(p);
  Vector d0(p);
  for (Index j = 0; j < p; ++j) d0(j) = rng.uniform(0.3, 2.0);
  return SeparableQcqp::create(symmetrize(Q0 * d0.asDiagonal() * Q0.transpose()),
                               0.4 * rng.normal_vector(p), rng.uniform(-1.0, 1.0),
                               std::move(blocks));
}

// Standard form of the inner maximization of a small robust least-squares
// instance at a random outer point.
inline SeparableQcqp generate_rls_toy(std::uint64_t seed, int p = 2, int N = 2) {
  Rng rng(seed ^ 0xc1a55e05ULL);
  const Index cols = std::clamp<Index>(p, 1, 2);
  const Index rows = std::clamp<Index>(N, 2, 4);
  Matrix A(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) A(r, c) = rng.normal();
  const Vector b = rng.normal_vector(rows);
  Vector rho(cols + 1);
  for (Index i = 0; i <= cols; ++i) rho(i) = rng.uniform(0.2, 0.9);
  const Vector x = 0.7 * rng.normal_vector(cols);
  return rls_inner_form(RlsInstance::create(std::move(A), b, std::move(rho)), x);
}

inline SeparableQcqp generate_instance(InstanceKind kind, std::uint64_t seed, int p = 4,
                                       int N = 2) {
  if (p < 1 || p > 32) throw std::invalid_argument("generate: p must lie in [1, 32]");
  if (N < 1 || N > 16) throw std::invalid_argument("generate: blocks must lie in [1, 16]");
  if (N > p && kind != InstanceKind::RlsToy && kind != InstanceKind::OddCycleUncertified)
    throw std::invalid_argument("generate: more blocks than coordinates");
  switch (kind) {
    case InstanceKind::CertifiedCase1: return generate_certified_case1(seed, p, N);
    case InstanceKind::CertifiedCase2: return generate_certified_case2(seed, p, N);
    case InstanceKind::OddCycleUncertified: return generate_odd_cycle(seed);
    case InstanceKind::Convex: return generate_convex(seed, p, N);
    case InstanceKind::RlsToy: return generate_rls_toy(seed, p, N);
  }
  throw std::invalid_argument("generate: unknown kind");
}

}  // namespace sepqp
