#pragma once

// Shared fixtures: tiny matrix builders, a scalar-loop quadratic evaluator
// kept deliberately independent of the library's Eigen expressions, canonical
// example problems, and randomized instance builders.  Header-only and free
// of any test-framework dependency so both the unit suite and the acceptance
// runner can use it.

#include "sepqp/sepqp.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace testutil {

using sepqp::ConstraintKind;
using sepqp::Index;
using sepqp::Matrix;
using sepqp::SeparableQcqp;
using sepqp::Vector;

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.begin()->size());
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (const double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> entries) {
  Vector v(static_cast<Index>(entries.size()));
  Index i = 0;
  for (const double e : entries) v(i++) = e;
  return v;
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sepqp_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Plain-loop quadratic evaluation: the duplicate implementation used as an
// oracle against the library's Eigen-based one.
inline double quad_value(const Matrix& A, const Vector& b, double c, const Vector& x) {
  double acc = c;
  for (Index i = 0; i < x.size(); ++i) {
    acc += 2.0 * b(i) * x(i);
    for (Index j = 0; j < x.size(); ++j) acc += x(i) * A(i, j) * x(j);
  }
  return acc;
}

// f = −x² subject to x² ≤ 1: the canonical nonconvex instance with known
// solution x* = ±1, optimal value −1, and dual maximizer λ* = 1.
inline SeparableQcqp trust_region() {
  sepqp::BlockConstraint blk;
  blk.A = mat({{1.0}});
  blk.b = vec({0.0});
  blk.c = -1.0;
  blk.kind = ConstraintKind::Inequality;
  return SeparableQcqp::create(mat({{-1.0}}), vec({0.0}), 0.0, {blk});
}

// f = a0·x² subject to x² − r² (kind selectable): scalar workhorse.
inline SeparableQcqp scalar_problem(double a0, double b0 = 0.0, double c0 = 0.0,
                                    double radius2 = 1.0,
                                    ConstraintKind kind = ConstraintKind::Inequality) {
  sepqp::BlockConstraint blk;
  blk.A = mat({{1.0}});
  blk.b = vec({0.0});
  blk.c = -radius2;
  blk.kind = kind;
  return SeparableQcqp::create(mat({{a0}}), vec({b0}), c0, {blk});
}

// Random blocks with positive-definite Hessians and strictly negative minima;
// optionally equality kinds mixed in.
inline SeparableQcqp random_convex_blocks(sepqp::Rng& rng, int p, int N, bool mix_equality,
                                          bool convex_objective) {
  std::vector<Index> sizes(static_cast<std::size_t>(N), 1);
  for (int extra = 0; extra < p - N; ++extra)
    sizes[static_cast<std::size_t>(rng.uniform_int(0, N - 1))] += 1;
  std::vector<sepqp::BlockConstraint> blocks;
  for (int i = 0; i < N; ++i) {
    const Index n = sizes[static_cast<std::size_t>(i)];
    const Matrix Q = rng.orthogonal(n);
    Vector d(n);
    for (Index j = 0; j < n; ++j) d(j) = rng.uniform(0.5, 2.0);
    sepqp::BlockConstraint blk;
    blk.A = sepqp::symmetrize(Q * d.asDiagonal() * Q.transpose());
    const Vector z = 0.5 * rng.normal_vector(n);
    blk.b = -blk.A * z;
    blk.c = rng.uniform(-2.0, -0.5) + z.dot(blk.A * z);
    blk.kind = mix_equality && rng.uniform() < 0.4 ? ConstraintKind::Equality
                                                   : ConstraintKind::Inequality;
    blocks.push_back(std::move(blk));
  }
  Matrix A0;
  if (convex_objective) {
    const Matrix Q0 = rng.orthogonal(p);
    Vector d0(p);
    for (Index j = 0; j < p; ++j) d0(j) = rng.uniform(0.3, 2.0);
    A0 = sepqp::symmetrize(Q0 * d0.asDiagonal() * Q0.transpose());
  } else {
    A0 = sepqp::symmetrize(Matrix(0.5 * (rng.orthogonal(p) + rng.orthogonal(p))));
  }
  return SeparableQcqp::create(std::move(A0), 0.3 * rng.normal_vector(p),
                               rng.uniform(-1.0, 1.0), std::move(blocks));
}

}  // namespace testutil
