#pragma once

// Problem file format: a single JSON document.
//
// {
//   "schema_version": 1,
//   "A0": [[...], ...],   // row-major, p x p
//   "b0": [...],
//   "c0": 0.0,
//   "blocks": [
//     {"A": [[...], ...], "b": [...], "c": -1.0, "kind": "ineq" | "eq"},
//     ...
//   ]
// }
//
// Loading validates shape, symmetry and finiteness through
// SeparableQcqp::create; every error names the offending field.  Saving and
// re-loading reproduces the in-memory model exactly (doubles are written
// with round-trip precision).

#include "sepqp/model.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace sepqp {

namespace detail {

using nlohmann::json;

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number())
    throw std::invalid_argument(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(where + ": not finite");
  return v;
}

inline Vector as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix as_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = as_vector(j[r], where + "[" + std::to_string(r) + "]");
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw std::invalid_argument(where + "[" + std::to_string(r) + "]: ragged row");
    }
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

inline SeparableQcqp parse_problem(const nlohmann::json& doc,
                                   const Tolerances& tol = {}) {
  using detail::as_matrix;
  using detail::as_number;
  using detail::as_vector;
  if (!doc.is_object()) throw std::invalid_argument("document: expected a JSON object");
  if (!doc.contains("schema_version"))
    throw std::invalid_argument("schema_version: missing");
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1)
    throw std::invalid_argument("schema_version: expected 1");
  for (const char* key : {"A0", "b0", "c0", "blocks"})
    if (!doc.contains(key)) throw std::invalid_argument(std::string(key) + ": missing");

  Matrix A0 = as_matrix(doc["A0"], "A0");
  Vector b0 = as_vector(doc["b0"], "b0");
  const double c0 = as_number(doc["c0"], "c0");

  if (!doc["blocks"].is_array() || doc["blocks"].empty())
    throw std::invalid_argument("blocks: expected a non-empty array");
  std::vector<BlockConstraint> blocks;
  for (std::size_t i = 0; i < doc["blocks"].size(); ++i) {
    const std::string where = "blocks[" + std::to_string(i) + "]";
    const auto& jb = doc["blocks"][i];
    if (!jb.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const char* key : {"A", "b", "c", "kind"})
      if (!jb.contains(key)) throw std::invalid_argument(where + "." + key + ": missing");
    BlockConstraint blk;
    blk.A = as_matrix(jb["A"], where + ".A");
    blk.b = as_vector(jb["b"], where + ".b");
    blk.c = as_number(jb["c"], where + ".c");
    if (!jb["kind"].is_string())
      throw std::invalid_argument(where + ".kind: expected \"ineq\" or \"eq\"");
    const std::string kind = jb["kind"].get<std::string>();
    if (kind == "ineq")
      blk.kind = ConstraintKind::Inequality;
    else if (kind == "eq")
      blk.kind = ConstraintKind::Equality;
    else
      throw std::invalid_argument(where + ".kind: expected \"ineq\" or \"eq\", got \"" + kind + "\"");
    blocks.push_back(std::move(blk));
  }
  return SeparableQcqp::create(std::move(A0), std::move(b0), c0, std::move(blocks), tol);
}

inline nlohmann::json problem_to_json(const SeparableQcqp& q) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["A0"] = detail::to_json(q.A0);
  doc["b0"] = detail::to_json(q.b0);
  doc["c0"] = q.c0;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& blk : q.blocks) {
    nlohmann::json jb;
    jb["A"] = detail::to_json(blk.A);
    jb["b"] = detail::to_json(blk.b);
    jb["c"] = blk.c;
    jb["kind"] = to_string(blk.kind);
    blocks.push_back(std::move(jb));
  }
  doc["blocks"] = std::move(blocks);
  return doc;
}

inline SeparableQcqp load_problem(const std::string& path, const Tolerances& tol = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_problem(doc, tol);
}

inline void save_problem(const SeparableQcqp& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open file for writing");
  out << problem_to_json(q).dump(2) << "\n";
  if (!out) throw Error(path + ": write failed");
}

}  // namespace sepqp
