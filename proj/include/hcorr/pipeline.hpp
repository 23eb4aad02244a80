#pragma once

#include "hcorr/fem.hpp"
#include "hcorr/kernels.hpp"
#include "hcorr/solver.hpp"

#include <memory>
#include <optional>

namespace hcorr {

struct ProblemOptions {
  CoefficientField coeffs = CoefficientField::laplace();
  /// Constant mean load E_f; zero gives a zero-mean solution.
  double mean_load = 0.0;
  /// Keep C_u and the trees in the result.
  bool keep_matrices = false;
};

struct PipelineResult {
  index_t dofs = 0;
  Vector variance;         ///< per DoF, original ordering
  Vector vertex_variance;  ///< per vertex, zero on the boundary
  Vector mean;             ///< per DoF
  SolveReport report;
  KernelAssemblyStats cf_assembly;
  nlohmann::json partition;  ///< {"stiffness": ..., "correlation": ...}
  std::size_t total_bytes = 0;
  std::size_t allocated_bytes = 0;
  std::optional<HMatrix> Cu;
  std::shared_ptr<const ClusterTree> clusters;
};

/// Full H-matrix path: stiffness and correlation in H-format, H-LU, iterative
/// refinement and the variance field.
PipelineResult run_pipeline(const Mesh& mesh, const KernelSpec& kernel, const SolverConfig& config,
                            const ProblemOptions& options = {});

/// Dense correlation and stiffness matrices (original DoF ordering) for oracle checks.
Matrix dense_correlation_matrix(const Mesh& mesh, const KernelSpec& kernel);

/// Low-rank reference: C_f ~ L_f L_f^T by pivoted Cholesky (trace error
/// <= rel_trace_tol * trace C_f), L_u = A^{-1} L_f, variance_i = |row_i(L_u)|^2 - mean_i^2.
struct ReferenceResult {
  Vector variance;
  Vector vertex_variance;
  index_t rank = 0;
  double trace_error = 0.0;
};
ReferenceResult reference_variance(const Mesh& mesh, const KernelSpec& kernel, double rel_trace_tol,
                                   const ProblemOptions& options = {});

}  // namespace hcorr
