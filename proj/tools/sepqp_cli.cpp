// Command-line front end: certification, dual solves, oracle comparisons,
// robust least squares, and deterministic instance generation.
//
// Exit codes: 0 success (and Certified / globally solved), 2 for Unknown or
// uncertified outcomes, 1 for usage or runtime errors.  Diagnostics go to
// stderr; results go to stdout or the --out file.

#include "sepqp/sepqp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json_safe(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);  // JSON has no inf/nan literals; encode as strings
}

json vector_to_json(const sepqp::Vector& v) {
  json arr = json::array();
  for (sepqp::Index i = 0; i < v.size(); ++i) arr.push_back(to_json_safe(v(i)));
  return arr;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

void write_trace(const std::string& path, const std::vector<sepqp::TraceRow>& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  f << "iter,q_lambda,primal_f,gap,min_eig,step\n";
  for (const auto& row : trace)
    f << row.iter << ',' << fmt(row.q_lambda) << ',' << fmt(row.primal_f) << ','
      << fmt(row.gap) << ',' << fmt(row.min_eig) << ',' << fmt(row.step) << '\n';
}

sepqp::Method parse_method(const std::string& name) {
  if (name == "ascent") return sepqp::Method::Ascent;
  if (name == "augmented") return sepqp::Method::Augmented;
  if (name == "flexa") return sepqp::Method::Flexa;
  throw CLI::ValidationError("--method", "must be one of: ascent, augmented, flexa");
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

int run_certify(const std::string& in, const std::string& format, const std::string& out,
                double alpha) {
  const sepqp::SeparableQcqp q = sepqp::load_problem(in);
  const sepqp::Certificate cert = sepqp::certify(q, {}, alpha);

  if (format == "json") {
    json doc;
    doc["status"] = sepqp::to_string(cert.status);
    doc["case"] = sepqp::to_string(cert.cert_case);
    doc["fully_diagonal"] = cert.is_fully_diagonal;
    doc["signing"] = vector_to_json(cert.D);
    doc["residual_columns"] = cert.sys.residual;
    doc["reasons"] = cert.reasons;
    emit(doc.dump(2), out);
  } else {
    std::ostringstream os;
    os << "status: " << sepqp::to_string(cert.status) << '\n';
    os << "case: " << sepqp::to_string(cert.cert_case) << '\n';
    if (cert.status == sepqp::CertStatus::Certified) {
      os << "signing:";
      for (sepqp::Index j = 0; j < cert.D.size(); ++j)
        os << ' ' << (cert.D(j) > 0 ? '+' : '-');
      os << '\n';
    }
    if (!cert.sys.residual.empty()) {
      os << "residual columns:";
      for (const auto j : cert.sys.residual) os << ' ' << j;
      os << '\n';
    }
    for (const auto& r : cert.reasons) os << "reason: " << r << '\n';
    emit(os.str(), out);
  }
  return cert.status == sepqp::CertStatus::Certified ? 0 : 2;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int run_solve(const std::string& in, const sepqp::SolverConfig& cfg,
              const std::string& format, const std::string& out,
              const std::string& trace_path) {
  const sepqp::SeparableQcqp q = sepqp::load_problem(in);
  const sepqp::Solution sol = sepqp::solve_dual_ascent(q, cfg);

  if (!trace_path.empty()) write_trace(trace_path, sol.trace);

  if (format == "json") {
    json doc;
    doc["status"] = sepqp::to_string(sol.status);
    doc["primal_value"] = to_json_safe(sol.primal_value);
    doc["dual_value"] = to_json_safe(sol.dual_value);
    doc["gap"] = to_json_safe(sol.gap);
    doc["kkt_residual"] = to_json_safe(sol.kkt_residual);
    doc["lambda"] = vector_to_json(sol.lambda);
    doc["x"] = vector_to_json(sol.x);
    doc["iterations"] = sol.trace.size();
    doc["note"] = sol.note;
    emit(doc.dump(2), out);
  } else {
    std::ostringstream os;
    os << "status: " << sepqp::to_string(sol.status) << '\n';
    os << "primal value: " << fmt(sol.primal_value) << '\n';
    os << "dual value: " << fmt(sol.dual_value) << '\n';
    os << "gap: " << fmt(sol.gap) << '\n';
    os << "kkt residual: " << fmt(sol.kkt_residual) << '\n';
    os << "iterations: " << sol.trace.size() << '\n';
    os << "lambda:";
    for (sepqp::Index i = 0; i < sol.lambda.size(); ++i) os << ' ' << fmt(sol.lambda(i));
    os << '\n';
    os << "x:";
    for (sepqp::Index i = 0; i < sol.x.size(); ++i) os << ' ' << fmt(sol.x(i));
    os << '\n';
    if (!sol.note.empty()) os << "note: " << sol.note << '\n';
    emit(os.str(), out);
  }
  return sol.status == sepqp::SolveStatus::GlobalCertified ? 0 : 2;
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

int run_oracle_check(const std::string& in, const sepqp::SolverConfig& cfg,
                     int points_per_dim, int rounds, int threads,
                     const std::string& format, const std::string& out) {
  const sepqp::SeparableQcqp q = sepqp::load_problem(in);
  sepqp::GridSpec spec = sepqp::default_grid(q, points_per_dim, rounds);
  const sepqp::GapReport rep = sepqp::duality_gap_report(q, cfg, spec, threads);

  if (format == "json") {
    json doc;
    doc["certificate"] = sepqp::to_string(rep.certificate.status);
    doc["solver_status"] = sepqp::to_string(rep.solution.status);
    doc["dual_value"] = to_json_safe(rep.solution.dual_value);
    doc["oracle_value"] = to_json_safe(rep.oracle.value);
    doc["oracle_found"] = rep.oracle.found;
    doc["gap_estimate"] = to_json_safe(rep.gap_estimate);
    doc["pitch"] = rep.oracle.pitch;
    doc["error_bound"] = rep.oracle.error_bound;
    doc["points_evaluated"] = rep.oracle.evaluated;
    emit(doc.dump(2), out);
  } else {
    std::ostringstream os;
    os << "certificate: " << sepqp::to_string(rep.certificate.status) << '\n';
    os << "solver status: " << sepqp::to_string(rep.solution.status) << '\n';
    os << "dual value: " << fmt(rep.solution.dual_value) << '\n';
    os << "oracle value: " << (rep.oracle.found ? fmt(rep.oracle.value) : "not found") << '\n';
    os << "gap estimate: " << fmt(rep.gap_estimate) << '\n';
    os << "grid pitch: " << fmt(rep.oracle.pitch)
       << "  error bound: " << fmt(rep.oracle.error_bound)
       << "  points: " << rep.oracle.evaluated << '\n';
    emit(os.str(), out);
  }
  return rep.certificate.status == sepqp::CertStatus::Certified ? 0 : 2;
}

// ---------------------------------------------------------------------------
// rls
// ---------------------------------------------------------------------------

sepqp::Matrix read_csv_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof() && ls.fail())
      throw std::runtime_error("data file has a non-numeric field: " + path);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("data file is empty: " + path);
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw std::runtime_error("data file rows have ragged lengths");
  sepqp::Matrix m(static_cast<sepqp::Index>(rows.size()), static_cast<sepqp::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<sepqp::Index>(i), static_cast<sepqp::Index>(j)) = rows[i][j];
  return m;
}

int run_rls(const std::string& in, const std::string& rho_arg, const sepqp::SolverConfig& cfg,
            const std::string& format, const std::string& out, const std::string& trace_path) {
  const sepqp::Matrix data = read_csv_matrix(in);
  if (data.cols() < 2)
    throw std::runtime_error("rls data needs at least one feature column plus the "
                             "observation column");
  const sepqp::Index p = data.cols() - 1;
  const sepqp::Matrix A = data.leftCols(p);
  const sepqp::Vector b = data.col(p);

  std::string cleaned = rho_arg;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream rs(cleaned);
  std::vector<double> vals;
  double v;
  while (rs >> v) vals.push_back(v);
  if (vals.empty()) throw std::runtime_error("--rho: expected a scalar or a comma list");
  sepqp::Vector rho(p + 1);
  if (vals.size() == 1)
    rho.setConstant(vals[0]);
  else if (vals.size() == static_cast<std::size_t>(p + 1))
    for (sepqp::Index i = 0; i <= p; ++i) rho(i) = vals[static_cast<std::size_t>(i)];
  else
    throw std::runtime_error("--rho: need 1 value or one per column of [A, b] (" +
                             std::to_string(p + 1) + ")");

  const sepqp::RlsInstance inst = sepqp::RlsInstance::create(A, b, rho);
  const sepqp::RlsFitResult fit = sepqp::rls_fit(inst, cfg);

  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) throw std::runtime_error("cannot open trace file: " + trace_path);
    tf << "iter,robust_objective\n";
    for (std::size_t k = 0; k < fit.history.size(); ++k)
      tf << k << ',' << fmt(fit.history[k]) << '\n';
  }

  if (format == "json") {
    json doc;
    doc["x"] = vector_to_json(fit.x);
    doc["robust_objective"] = to_json_safe(fit.history.back());
    doc["outer_iterations"] = fit.history.size();
    doc["converged"] = fit.converged;
    doc["note"] = fit.note;
    emit(doc.dump(2), out);
  } else {
    std::ostringstream os;
    os << "x:";
    for (sepqp::Index i = 0; i < fit.x.size(); ++i) os << ' ' << fmt(fit.x(i));
    os << '\n';
    os << "robust objective: " << fmt(fit.history.back()) << '\n';
    os << "outer iterations: " << fit.history.size() << '\n';
    os << "converged: " << (fit.converged ? "yes" : "no") << '\n';
    if (!fit.note.empty()) os << "note: " << fit.note << '\n';
    emit(os.str(), out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int run_generate(const std::string& kind_name, std::uint64_t seed, int p, int N,
                 const std::string& out) {
  const sepqp::InstanceKind kind = sepqp::parse_instance_kind(kind_name);
  const sepqp::SeparableQcqp q = sepqp::generate_instance(kind, seed, p, N);
  if (out.empty()) {
    std::cout << sepqp::problem_to_json(q).dump(2) << '\n';
  } else {
    sepqp::save_problem(q, out);
    std::cout << "wrote " << out << " (" << kind_name << ", seed " << seed << ", dim "
              << q.dim() << ", blocks " << q.num_blocks() << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong-duality certification and global dual solves for QCQPs with "
               "block-separable quadratic constraints"};
  app.require_subcommand(1);

  std::string in, out, format = "text", trace_path;
  double alpha = 0.0;
  sepqp::SolverConfig cfg;
  std::string method_name = "ascent";
  int points_per_dim = 9, rounds = 2, threads = 1;
  std::string kind_name;
  std::uint64_t seed = 0;
  int gen_p = 4, gen_blocks = 2;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--out", out, "Write the result to this file instead of stdout");
  };
  auto add_solver_opts = [&](CLI::App* sub) {
    sub->add_option("--method", method_name, "Inner minimizer: ascent, augmented, or flexa");
    sub->add_option("--mu0", cfg.mu0, "Initial dual step size (0 = automatic)");
    sub->add_option("--max-outer", cfg.max_outer, "Outer iteration limit");
    sub->add_option("--gap-tol", cfg.gap_tol, "Gap tolerance for stopping and status");
    sub->add_option("--rho", cfg.rho_aug, "Augmented-Lagrangian penalty weight");
    sub->add_option("--seed", cfg.seed, "Seed for randomized multistarts");
    sub->add_option("--threads", cfg.threads, "Parallelism cap for block updates");
  };

  CLI::App* c_certify = app.add_subcommand("certify", "Check the strong-duality certificate");
  c_certify->add_option("file", in, "Problem file (JSON)")->required();
  c_certify->add_option("--alpha", alpha, "Objective level for the transformed system");
  add_common(c_certify);

  CLI::App* c_solve = app.add_subcommand("solve", "Run the dual-ascent global solver");
  c_solve->add_option("file", in, "Problem file (JSON)")->required();
  c_solve->add_option("--trace", trace_path, "Write per-iteration trace CSV here");
  add_solver_opts(c_solve);
  add_common(c_solve);

  CLI::App* c_oracle = app.add_subcommand("oracle-check",
                                          "Compare the dual solve against a grid oracle");
  c_oracle->add_option("file", in, "Problem file (JSON)")->required();
  c_oracle->add_option("--points-per-dim", points_per_dim, "Grid points per scanned dimension");
  c_oracle->add_option("--rounds", rounds, "Refinement rounds around the incumbent");
  c_oracle->add_option("--threads", threads, "Parallelism cap for the grid scan");
  add_common(c_oracle);

  CLI::App* c_rls = app.add_subcommand("rls", "Robust least-squares fit");
  c_rls->add_option("file", in, "CSV data: rows are observations, last column is b")
      ->required();
  std::string rho_arg;
  c_rls->add_option("--rho", rho_arg, "Column budgets: scalar or comma list")->required();
  c_rls->add_option("--trace", trace_path, "Write the outer objective history CSV here");
  c_rls->add_option("--seed", cfg.seed, "Seed for randomized multistarts");
  c_rls->add_option("--threads", cfg.threads, "Parallelism cap for block updates");
  add_common(c_rls);

  CLI::App* c_gen = app.add_subcommand("generate", "Write a deterministic random instance");
  c_gen->add_option("--kind", kind_name,
                    "certified_case1, certified_case2, odd_cycle_uncertified, convex, rls_toy")
      ->required();
  c_gen->add_option("--seed", seed, "Generator seed");
  c_gen->add_option("--p", gen_p, "Total variable dimension");
  c_gen->add_option("--blocks", gen_blocks, "Number of constraint blocks");
  c_gen->add_option("--out", out, "Output problem file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cfg.method = parse_method(method_name);
    if (c_certify->parsed()) return run_certify(in, format, out, alpha);
    if (c_solve->parsed()) return run_solve(in, cfg, format, out, trace_path);
    if (c_oracle->parsed())
      return run_oracle_check(in, cfg, points_per_dim, rounds, threads, format, out);
    if (c_rls->parsed()) return run_rls(in, rho_arg, cfg, format, out, trace_path);
    if (c_gen->parsed()) return run_generate(kind_name, seed, gen_p, gen_blocks, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand selected\n";
  return 1;
}
