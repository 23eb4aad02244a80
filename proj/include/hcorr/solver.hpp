#pragma once

#include "hcorr/hlu.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hcorr {

/// Which block trees the stiffness side (A and its LU factors) and the
/// correlation side (C_f, C_u) use.
enum class AdmissibilityCase { all_eta, weak_fem, weak_cor };

AdmissibilityCase parse_admissibility_case(std::string_view name);
std::string to_string(AdmissibilityCase c);
AdmissibilityMode stiffness_mode(AdmissibilityCase c);
AdmissibilityMode correlation_mode(AdmissibilityCase c);

struct SolverConfig {
  double eta = 2.0;
  index_t k_eta = 20;
  double c_eta_to_weak = 3.0;
  index_t n_min = 50;
  index_t weak_threshold = 1024;
  double truncation_tol = 1e-8;
  /// Truncation of the correction (LU)^{-1} Theta (LU)^{-T}; 0 means truncation_tol.
  double correction_tol = 0.0;
  double refinement_tol = 1e-6;
  /// Compare ||Theta||_F against refinement_tol * ||C_f||_F instead of refinement_tol.
  bool relative_residual = false;
  int max_iterations = 20;
  AdmissibilityCase admissibility_case = AdmissibilityCase::all_eta;
  int workers = 1;

  RankCaps caps() const { return RankCaps::from_factor(k_eta, c_eta_to_weak); }
  Truncation truncation() const { return {truncation_tol, caps()}; }
  /// Throws Error when a parameter is out of range.
  void validate() const;
};

struct SolveReport {
  int iterations = 0;  ///< refinement steps after the initial guess
  bool converged = false;
  /// The residual rose twice in a row, once by at most 10%, before reaching the tolerance.
  bool stagnated = false;
  std::vector<double> residual_history;  ///< ||Theta^(i)||_F, i = 0, 1, ...
  double lu_deviation = 0.0;
  double stiffness_norm = 0.0;
  std::map<std::string, double> timings;  ///< seconds per stage
  std::map<std::string, RankStats> ranks;
  std::map<std::string, double> storage_per_dof;  ///< bytes per DoF per matrix

  nlohmann::json to_json(bool with_timings = true) const;
};

/// Thrown when the residual grows by more than 10% in two consecutive iterations.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, SolveReport report)
      : NumericalError(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct CorrelationSolution {
  HMatrix Cu;
  SolveReport report;
};

/// Theta = C_f - A C A^T on the block tree of C.
HMatrix correlation_residual(const HMatrix& A, const HMatrix& C, const HMatrix& Cf, const Truncation& trunc);

/// Initial guess (LU)^{-1} C_f (LU)^{-T} followed by iterative refinement.
/// C_u lives on the block tree of C_f.
CorrelationSolution solve_correlation(const HMatrix& A, const HMatrix& Cf, const LUFactors& factors,
                                      const SolverConfig& config);

/// diag(C_u) - mean^2 in the original DoF ordering; an empty mean counts as zero.
Vector extract_variance(const HMatrix& Cu, const Vector& mean = {});

}  // namespace hcorr
