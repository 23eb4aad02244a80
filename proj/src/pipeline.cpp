#include "hcorr/pipeline.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>

namespace hcorr {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

Vector mean_solution(const Mesh& mesh, const SparseMatrix& A, const ProblemOptions& options) {
  const double f = options.mean_load;
  if (f == 0.0) return Vector::Zero(mesh.num_dofs());
  return solve_mean(A, assemble_load(mesh, [f](const Point&) { return f; }));
}

}  // namespace

PipelineResult run_pipeline(const Mesh& mesh, const KernelSpec& kernel, const SolverConfig& config,
                            const ProblemOptions& options) {
  config.validate();
  const index_t n = mesh.num_dofs();
  if (n == 0) throw MeshError("mesh has no interior degrees of freedom");
  const Truncation trunc = config.truncation();
  PipelineResult res;
  res.dofs = n;
  std::map<std::string, double> timings;

  auto t = clock_type::now();
  const std::vector<Point> points = mesh.dof_points();
  const std::vector<BoundingBox> supports = mesh.dof_support_boxes();
  auto clusters = std::make_shared<const ClusterTree>(build_cluster_tree(points, mesh.dim(), config.n_min, supports));
  auto eta_tree = std::make_shared<const BlockClusterTree>(clusters, AdmissibilityMode::all_eta, config.eta,
                                                           config.weak_threshold);
  std::shared_ptr<const BlockClusterTree> weak_tree;
  if (config.admissibility_case != AdmissibilityCase::all_eta)
    weak_tree = std::make_shared<const BlockClusterTree>(clusters, AdmissibilityMode::weak, config.eta,
                                                         config.weak_threshold);
  auto tree_for = [&](AdmissibilityMode m) { return m == AdmissibilityMode::weak ? weak_tree : eta_tree; };
  const auto a_tree = tree_for(stiffness_mode(config.admissibility_case));
  const auto c_tree = tree_for(correlation_mode(config.admissibility_case));
  timings["clustering"] = seconds_since(t);

  t = clock_type::now();
  const SparseMatrix A_sparse = assemble_stiffness(mesh, options.coeffs);
  HMatrix A = sparse_to_h(A_sparse, a_tree, trunc);
  timings["stiffness_assembly"] = seconds_since(t);

  t = clock_type::now();
  HMatrix Cf = kernel_to_h(galerkin_entry_gen(kernel, mesh), eta_tree, trunc, config.workers, &res.cf_assembly);
  if (c_tree != eta_tree) Cf = convert_to(Cf, c_tree, trunc);
  timings["correlation_assembly"] = seconds_since(t);

  t = clock_type::now();
  LUFactors lu = h_lu(A, trunc);
  timings["lu"] = seconds_since(t);

  t = clock_type::now();
  const double deviation = lu_deviation(A, lu);
  const double a_norm = h_spectral_norm(A);
  timings["lu_deviation"] = seconds_since(t);

  CorrelationSolution sol = solve_correlation(A, Cf, lu, config);
  SolveReport& rep = sol.report;
  rep.lu_deviation = deviation;
  rep.stiffness_norm = a_norm;
  for (const auto& [k, v] : rep.timings) timings[k] = v;
  timings["solve"] = rep.timings["initial_guess"] + rep.timings["refinement"];

  t = clock_type::now();
  res.mean = mean_solution(mesh, A_sparse, options);
  res.variance = extract_variance(sol.Cu, res.mean);
  res.vertex_variance = expand_to_vertices(mesh, res.variance);
  timings["variance"] = seconds_since(t);
  rep.timings = timings;

  const std::pair<const char*, const HMatrix*> mats[] = {
      {"stiffness", &A}, {"lower", &lu.L}, {"upper", &lu.U}, {"cf", &Cf}, {"cu", &sol.Cu}};
  const RankCaps caps = config.caps();
  for (const auto& [name, m] : mats) {
    rep.ranks[name] = m->rank_stats();
    const std::size_t b = m->bytes();
    rep.storage_per_dof[name] = static_cast<double>(b) / static_cast<double>(n);
    res.total_bytes += b;
    res.allocated_bytes += m->allocated_bytes(caps);
  }
  rep.storage_per_dof["total"] = static_cast<double>(res.total_bytes) / static_cast<double>(n);
  rep.storage_per_dof["total_allocated"] = static_cast<double>(res.allocated_bytes) / static_cast<double>(n);

  res.partition = {{"stiffness", A.partition_json()}, {"correlation", sol.Cu.partition_json()}};
  res.report = std::move(rep);
  res.clusters = clusters;
  if (options.keep_matrices) res.Cu.emplace(std::move(sol.Cu));
  return res;
}

Matrix dense_correlation_matrix(const Mesh& mesh, const KernelSpec& kernel) {
  const index_t n = mesh.num_dofs();
  const EntryFn g = galerkin_entry_gen(kernel, mesh);
  Matrix C(n, n);
  for (index_t j = 0; j < n; ++j)
    for (index_t i = j; i < n; ++i) C(i, j) = C(j, i) = g(i, j);
  return C;
}

ReferenceResult reference_variance(const Mesh& mesh, const KernelSpec& kernel, double rel_trace_tol,
                                   const ProblemOptions& options) {
  const index_t n = mesh.num_dofs();
  if (n == 0) throw MeshError("mesh has no interior degrees of freedom");
  const EntryFn g = galerkin_entry_gen(kernel, mesh);
  Vector diag(n);
  for (index_t i = 0; i < n; ++i) diag[i] = g(i, i);
  const PivotedCholeskyResult pc = pivoted_cholesky(diag, g, rel_trace_tol * diag.sum(), n);

  const SparseMatrix A = assemble_stiffness(mesh, options.coeffs);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A.to_eigen());
  if (llt.info() != Eigen::Success) throw NumericalError("reference solve: stiffness matrix is not SPD");
  const Matrix Lu = llt.solve(pc.L);

  ReferenceResult r;
  r.rank = pc.L.cols();
  r.trace_error = pc.trace_error;
  const Vector mean = mean_solution(mesh, A, options);
  r.variance = Lu.rowwise().squaredNorm() - mean.cwiseProduct(mean);
  r.vertex_variance = expand_to_vertices(mesh, r.variance);
  return r;
}

}  // namespace hcorr
