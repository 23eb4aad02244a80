#include "hcorr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace hcorr {

AdmissibilityCase parse_admissibility_case(std::string_view name) {
  if (name == "all_eta") return AdmissibilityCase::all_eta;
  if (name == "weak_fem") return AdmissibilityCase::weak_fem;
  if (name == "weak_cor") return AdmissibilityCase::weak_cor;
  throw Error("unknown admissibility case '" + std::string(name) + "'");
}

std::string to_string(AdmissibilityCase c) {
  switch (c) {
    case AdmissibilityCase::all_eta: return "all_eta";
    case AdmissibilityCase::weak_fem: return "weak_fem";
    case AdmissibilityCase::weak_cor: return "weak_cor";
  }
  return "unknown";
}

AdmissibilityMode stiffness_mode(AdmissibilityCase c) {
  return c == AdmissibilityCase::all_eta ? AdmissibilityMode::all_eta : AdmissibilityMode::weak;
}

AdmissibilityMode correlation_mode(AdmissibilityCase c) {
  return c == AdmissibilityCase::weak_cor ? AdmissibilityMode::weak : AdmissibilityMode::all_eta;
}

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid solver setting: ") + what);
  };
  require(eta > 0.0, "eta must be positive");
  require(k_eta >= 1, "k_eta must be at least 1");
  require(c_eta_to_weak > 0.0, "c_eta_to_weak must be positive");
  require(n_min >= 1, "n_min must be at least 1");
  require(weak_threshold >= 1, "weak_threshold must be at least 1");
  require(truncation_tol >= 0.0, "truncation_tol must be non-negative");
  require(correction_tol >= 0.0, "correction_tol must be non-negative");
  require(refinement_tol >= 0.0, "refinement_tol must be non-negative");
  require(max_iterations >= 0, "max_iterations must be non-negative");
  require(workers >= 1, "workers must be at least 1");
}

nlohmann::json SolveReport::to_json(bool with_timings) const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["stagnated"] = stagnated;
  j["residual_history"] = residual_history;
  j["lu_deviation"] = lu_deviation;
  j["stiffness_norm"] = stiffness_norm;
  j["lu_relative_deviation"] = stiffness_norm > 0.0 ? lu_deviation / stiffness_norm : 0.0;
  nlohmann::json r = nlohmann::json::object();
  for (const auto& [name, s] : ranks)
    r[name] = {{"farfield_leaves", s.farfield_leaves}, {"average", s.average_rank}, {"max", s.max_rank}};
  j["ranks"] = r;
  j["storage_per_dof"] = storage_per_dof;
  if (with_timings) j["timings"] = timings;
  return j;
}

HMatrix correlation_residual(const HMatrix& A, const HMatrix& C, const HMatrix& Cf, const Truncation& trunc) {
  HMatrix T(C.tree_ptr());
  multiply_add(1.0, A, C, T, trunc);
  HMatrix theta = Cf.tree_ptr() == C.tree_ptr() ? Cf : convert_to(Cf, C.tree_ptr(), trunc);
  multiply_add(-1.0, T, transpose(A), theta, trunc);
  return theta;
}

namespace {
constexpr double stagnation_factor = 1.1;
}  // namespace

CorrelationSolution solve_correlation(const HMatrix& A, const HMatrix& Cf, const LUFactors& factors,
                                      const SolverConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  const Truncation trunc = config.truncation();
  Truncation corr = trunc;
  if (config.correction_tol > 0.0) corr.tol = config.correction_tol;

  SolveReport report;
  auto t0 = clock::now();
  HMatrix Cu = h_triangular_solve(factors, h_triangular_solve(factors, Cf, Side::left, corr), Side::right, corr);
  report.timings["initial_guess"] = seconds(t0);

  const double threshold = config.relative_residual ? config.refinement_tol * Cf.frobenius_norm()
                                                    : config.refinement_tol;
  t0 = clock::now();
  for (int i = 0;; ++i) {
    HMatrix theta = correlation_residual(A, Cu, Cf, trunc);
    const double r = theta.frobenius_norm();
    report.residual_history.push_back(r);
    if (r < threshold) {
      report.converged = true;
      break;
    }
    const auto& h = report.residual_history;
    const std::size_t n = h.size();
    if (n >= 3 && h[n - 1] > h[n - 2] && h[n - 2] > h[n - 3]) {
      // growth by a few percent is noise at the truncation floor, not divergence
      if (h[n - 1] <= stagnation_factor * h[n - 2] || h[n - 2] <= stagnation_factor * h[n - 3]) {
        report.stagnated = true;
        break;
      }
      report.timings["refinement"] = seconds(t0);
      throw DivergenceError("iterative refinement diverges: residual increased twice in a row", report);
    }
    if (i == config.max_iterations) break;
    HMatrix delta =
        h_triangular_solve(factors, h_triangular_solve(factors, theta, Side::left, corr), Side::right, corr);
    add_into(1.0, delta, Cu, trunc);
    report.iterations = i + 1;
  }
  report.timings["refinement"] = seconds(t0);
  return {std::move(Cu), std::move(report)};
}

namespace {

void collect_diagonal(const HNode& n, Vector& diag) {
  const index_t b = std::max(n.row_begin, n.col_begin);
  const index_t e = std::min(n.row_end, n.col_end);
  if (b >= e) return;
  if (n.is_subdivided()) {
    for (const auto& s : n.sons()) collect_diagonal(s, diag);
    return;
  }
  for (index_t k = b; k < e; ++k) {
    const index_t i = k - n.row_begin, j = k - n.col_begin;
    diag[k] += n.is_dense() ? n.dense()(i, j) : n.rk().U.row(i).dot(n.rk().V.row(j));
  }
}

}  // namespace

Vector extract_variance(const HMatrix& Cu, const Vector& mean) {
  Vector diag = Vector::Zero(Cu.size());
  collect_diagonal(Cu.root(), diag);
  Vector v = Cu.clusters().to_original(diag);
  if (mean.size() > 0) {
    if (mean.size() != v.size()) throw Error("extract_variance: mean has the wrong length");
    v -= mean.cwiseProduct(mean);
  }
  return v;
}

}  // namespace hcorr
