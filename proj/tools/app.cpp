#include "app.hpp"

#include "hcorr/w11.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hcorr::app {

namespace fs = std::filesystem;
using nlohmann::json;

LengthSpec LengthSpec::parse(const std::string& text) {
  LengthSpec s;
  try {
    if (text.rfind("diam", 0) == 0) {
      s.relative_to_diameter = true;
      const std::string rest = text.substr(4);
      if (rest.empty()) {
        s.value = 1.0;
      } else if (rest[0] == '/') {
        std::size_t used = 0;
        const double div = std::stod(rest.substr(1), &used);
        if (used != rest.size() - 1 || !(div > 0.0)) throw std::invalid_argument("bad divisor");
        s.value = 1.0 / div;
      } else {
        throw std::invalid_argument("bad suffix");
      }
    } else {
      std::size_t used = 0;
      s.value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
    }
  } catch (const std::exception&) {
    throw UsageError("invalid correlation length '" + text + "' (expected a number, 'diam' or 'diam/X')");
  }
  if (!(s.value > 0.0) || !std::isfinite(s.value)) throw UsageError("correlation length must be positive");
  return s;
}

double LengthSpec::resolve(const Mesh& mesh) const {
  return relative_to_diameter ? value * mesh.bounding_box().diameter() : value;
}

std::string LengthSpec::to_string() const {
  if (!relative_to_diameter) return format_number(value);
  return value == 1.0 ? "diam" : "diam/" + format_number(1.0 / value);
}

std::string format_seconds(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", seconds);
  return buf;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

double rounded_seconds(double s) { return std::stod(format_seconds(s)); }

template <class T>
T convert(const std::string& section, const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> std::boolalpha >> out;
  if (in.fail() || !(in >> std::ws).eof())
    throw ParseError("invalid value '" + value + "' for " + section + "." + key, 0);
  return out;
}

// Line of "key =" inside "[section]" for diagnostics; 0 if not found.
int find_line(const fs::path& path, const std::string& section, const std::string& key) {
  std::ifstream in(path);
  std::string line, current;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    if (line[b] == '[') {
      current = line.substr(b + 1, line.find(']') - b - 1);
    } else if (current == section && line.compare(b, key.size(), key) == 0) {
      return n;
    }
  }
  return 0;
}

}  // namespace

void apply_config_file(const fs::path& path, JobConfig& job) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message() + " in config file " + path.string(), static_cast<int>(e.line()));
  }
  bool shape_given = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ParseError("key '" + section + "' outside of a section", find_line(path, "", section));
    for (const auto& [key, node] : body) {
      const std::string v = node.data();
      try {
        auto num = [&]<class T>(T& target) { target = convert<T>(section, key, v); };
        bool known = true;
        if (section == "mesh") {
          if (key == "shape") job.mesh.shape = parse_mesh_shape(v), shape_given = true;
          else if (key == "level") num(job.mesh.level), shape_given = true;
          else if (key == "file") job.mesh.file = path.parent_path() / fs::path(v);
          else known = false;
        } else if (section == "kernel") {
          if (key == "family") job.kernel = parse_kernel_family(v);
          else if (key == "length") job.length = LengthSpec::parse(v);
          else known = false;
        } else if (section == "solver") {
          SolverConfig& s = job.solver;
          if (key == "eta") num(s.eta);
          else if (key == "k_eta") num(s.k_eta);
          else if (key == "c_eta_to_weak") num(s.c_eta_to_weak);
          else if (key == "n_min") num(s.n_min);
          else if (key == "weak_threshold") num(s.weak_threshold);
          else if (key == "truncation_tol") num(s.truncation_tol);
          else if (key == "correction_tol") num(s.correction_tol);
          else if (key == "refinement_tol") num(s.refinement_tol);
          else if (key == "relative_residual") num(s.relative_residual);
          else if (key == "max_iterations") num(s.max_iterations);
          else if (key == "case") s.admissibility_case = parse_admissibility_case(v);
          else if (key == "workers") num(s.workers);
          else known = false;
        } else if (section == "problem") {
          if (key == "mean_load") num(job.mean_load);
          else known = false;
        } else if (section == "bench") {
          if (key == "level_min") num(job.level_min);
          else if (key == "level_max") num(job.level_max);
          else if (key == "cholesky_max_dofs") num(job.cholesky_max_dofs);
          else if (key == "cholesky_rel_tol") num(job.cholesky_rel_tol);
          else known = false;
        } else if (section == "output") {
          if (key == "dir") job.out_dir = v;
          else if (key == "timings") num(job.timings);
          else known = false;
        } else {
          throw ParseError("unknown section [" + section + "]", find_line(path, section, key));
        }
        if (!known) throw ParseError("unknown key '" + key + "' in [" + section + "]", 0);
      } catch (const ParseError& e) {
        if (e.line() != 0) throw;
        const std::string msg = e.what();
        throw ParseError(msg.substr(msg.find(": ") + 2), find_line(path, section, key));
      } catch (const Error& e) {
        throw ParseError(e.what(), find_line(path, section, key));
      }
    }
  }
  if (job.mesh.file && shape_given) throw ParseError("config gives both a mesh file and a mesh generator", 0);
}

Mesh build_mesh(const MeshSource& source) {
  if (source.file) return load_mesh(*source.file);
  return generate_mesh(source.shape, source.level);
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

KernelSpec kernel_for(const JobConfig& job, const Mesh& mesh) { return {job.kernel, job.length.resolve(mesh)}; }

ProblemOptions options_for(const JobConfig& job) {
  ProblemOptions o;
  o.mean_load = job.mean_load;
  return o;
}

json mesh_json(const JobConfig& job, const Mesh& mesh) {
  json j;
  j["source"] = job.mesh.file ? job.mesh.file->string() : to_string(job.mesh.shape);
  if (!job.mesh.file) j["level"] = job.mesh.level;
  j["dim"] = mesh.dim();
  j["vertices"] = mesh.num_vertices();
  j["elements"] = mesh.num_elements();
  j["dofs"] = mesh.num_dofs();
  j["h"] = mesh.mesh_size();
  j["diameter"] = mesh.bounding_box().diameter();
  return j;
}

json solver_json(const SolverConfig& s) {
  return {{"eta", s.eta},
          {"k_eta", s.k_eta},
          {"c_eta_to_weak", s.c_eta_to_weak},
          {"k_weak", s.caps().weak},
          {"n_min", s.n_min},
          {"weak_threshold", s.weak_threshold},
          {"truncation_tol", s.truncation_tol},
          {"correction_tol", s.correction_tol > 0.0 ? s.correction_tol : s.truncation_tol},
          {"refinement_tol", s.refinement_tol},
          {"relative_residual", s.relative_residual},
          {"max_iterations", s.max_iterations},
          {"case", to_string(s.admissibility_case)},
          {"workers", s.workers}};
}

json report_json(const SolveReport& rep, bool timings) {
  json j = rep.to_json(timings);
  if (timings)
    for (auto& [k, v] : j["timings"].items()) v = rounded_seconds(v.get<double>());
  return j;
}

std::string variance_csv(const Mesh& mesh, const Vector& vertex_variance) {
  std::ostringstream out;
  out << "vertex,x,y" << (mesh.dim() == 3 ? ",z" : "") << ",variance\n";
  for (index_t v = 0; v < mesh.num_vertices(); ++v) {
    out << v;
    for (int a = 0; a < mesh.dim(); ++a) out << ',' << format_number(mesh.vertices()[v][a]);
    out << ',' << format_number(vertex_variance[v]) << '\n';
  }
  return out.str();
}

std::string time_cell(const JobConfig& job, double s) { return job.timings ? format_seconds(s) : "NA"; }

}  // namespace

int run_solve(const JobConfig& job) {
  const Mesh mesh = build_mesh(job.mesh);
  const KernelSpec kernel = kernel_for(job, mesh);
  ensure_dir(job.out_dir);
  json report;
  report["command"] = "solve";
  report["mesh"] = mesh_json(job, mesh);
  report["kernel"] = {{"family", to_string(kernel.family)}, {"length", kernel.length}, {"length_spec", job.length.to_string()}};
  report["config"] = solver_json(job.solver);
  report["mean_load"] = job.mean_load;

  PipelineResult res;
  try {
    res = run_pipeline(mesh, kernel, job.solver, options_for(job));
  } catch (const DivergenceError& e) {
    report["status"] = {{"converged", false}, {"outcome", "diverged"}};
    report["solve"] = report_json(e.report(), job.timings);
    write_text(job.out_dir / "report.json", report.dump(2) + "\n");
    std::cerr << "error: " << e.what() << "\n";
    return exit_diverged;
  }
  const bool converged = res.report.converged;
  report["status"] = {{"converged", converged},
                      {"stagnated", res.report.stagnated},
                      {"outcome", converged ? "converged" : "not converged"}};
  report["solve"] = report_json(res.report, job.timings);
  report["cf_assembly"] = {{"aca_blocks", res.cf_assembly.aca_blocks},
                           {"stagnated_blocks", res.cf_assembly.stagnated_blocks},
                           {"entries_evaluated", res.cf_assembly.entries_evaluated}};
  report["bytes"] = {{"stored", res.total_bytes}, {"allocated", res.allocated_bytes}};

  write_text(job.out_dir / "variance.csv", variance_csv(mesh, res.vertex_variance));
  write_text(job.out_dir / "report.json", report.dump(2) + "\n");
  write_text(job.out_dir / "partition.json", res.partition.dump(1) + "\n");
  if (!converged) {
    std::cerr << "warning: not converged after " << res.report.iterations << " refinement iterations (residual "
              << res.report.residual_history.back() << (res.report.stagnated ? ", stagnated" : "") << ")\n";
    return exit_not_converged;
  }
  return exit_ok;
}

int run_compare_admissibility(const JobConfig& job) {
  const Mesh mesh = build_mesh(job.mesh);
  const KernelSpec kernel = kernel_for(job, mesh);
  ensure_dir(job.out_dir);
  std::ostringstream csv;
  csv << "case,lu_time,solve_time,iterations,converged,lu_deviation";
  for (const char* m : {"stiffness", "lower", "upper", "cf", "cu"}) csv << ",avg_rank_" << m << ",max_rank_" << m;
  csv << ",storage_per_dof,variance_linf_diff\n";
  Vector base;
  bool all_converged = true;
  for (AdmissibilityCase c : {AdmissibilityCase::all_eta, AdmissibilityCase::weak_fem, AdmissibilityCase::weak_cor}) {
    SolverConfig cfg = job.solver;
    cfg.admissibility_case = c;
    const PipelineResult r = run_pipeline(mesh, kernel, cfg, options_for(job));
    if (c == AdmissibilityCase::all_eta) base = r.variance;
    const double scale = base.lpNorm<Eigen::Infinity>();
    const double diff = (r.variance - base).lpNorm<Eigen::Infinity>() / (scale > 0.0 ? scale : 1.0);
    all_converged = all_converged && r.report.converged;
    const auto& t = r.report.timings;
    csv << to_string(c) << ',' << time_cell(job, t.at("lu")) << ',' << time_cell(job, t.at("solve")) << ','
        << r.report.iterations << ',' << (r.report.converged ? 1 : 0) << ',' << format_number(r.report.lu_deviation);
    for (const char* m : {"stiffness", "lower", "upper", "cf", "cu"}) {
      const RankStats& s = r.report.ranks.at(m);
      csv << ',' << format_number(s.average_rank) << ',' << s.max_rank;
    }
    csv << ',' << format_number(r.report.storage_per_dof.at("total")) << ',' << format_number(diff) << '\n';
  }
  write_text(job.out_dir / "compare.csv", csv.str());
  return all_converged ? exit_ok : exit_not_converged;
}

int run_bench_scaling(const JobConfig& job) {
  if (job.mesh.file) throw UsageError("bench-scaling needs a generated mesh family, not a mesh file");
  if (job.level_max - job.level_min + 1 < 3)
    throw UsageError("bench-scaling needs a level range with at least 3 levels");
  if (job.level_min < 0) throw UsageError("levels must be non-negative");
  ensure_dir(job.out_dir);

  const Mesh ref_mesh = generate_mesh(job.mesh.shape, job.level_max + 1);
  const KernelSpec ref_kernel = kernel_for(job, ref_mesh);
  Vector ref_trace;
  if (ref_mesh.num_dofs() <= job.cholesky_max_dofs) {
    ref_trace = reference_variance(ref_mesh, ref_kernel, job.cholesky_rel_tol, options_for(job)).vertex_variance;
  } else {
    ref_trace = run_pipeline(ref_mesh, ref_kernel, job.solver, options_for(job)).vertex_variance;
  }

  std::ostringstream csv;
  csv << "level,N,h,w11_error,w11_ratio,iterations,lu_time,solve_time,storage_per_dof\n";
  double prev = 0.0;
  bool all_converged = true;
  for (int level = job.level_min; level <= job.level_max; ++level) {
    const Mesh mesh = generate_mesh(job.mesh.shape, level);
    Vector trace = Vector::Zero(mesh.num_vertices());
    double lu = 0.0, solve = 0.0, storage = 0.0;
    int iterations = 0;
    if (mesh.num_dofs() > 0) {
      const PipelineResult r = run_pipeline(mesh, kernel_for(job, mesh), job.solver, options_for(job));
      trace = r.vertex_variance;
      lu = r.report.timings.at("lu");
      solve = r.report.timings.at("solve");
      storage = r.report.storage_per_dof.at("total");
      iterations = r.report.iterations;
      all_converged = all_converged && r.report.converged;
    }
    const double err = w11_trace_error(mesh, trace, ref_mesh, ref_trace);
    csv << level << ',' << mesh.num_dofs() << ',' << format_number(mesh.mesh_size()) << ',' << format_number(err) << ','
        << (level > job.level_min && err > 0.0 ? format_number(prev / err) : "") << ',' << iterations << ','
        << time_cell(job, lu) << ',' << time_cell(job, solve) << ',' << format_number(storage) << '\n';
    prev = err;
  }
  write_text(job.out_dir / "scaling.csv", csv.str());
  return all_converged ? exit_ok : exit_not_converged;
}

int run_dump_partition(const JobConfig& job) {
  const Mesh mesh = build_mesh(job.mesh);
  if (mesh.num_dofs() == 0) throw MeshError("mesh has no interior degrees of freedom");
  ensure_dir(job.out_dir);
  const SolverConfig& s = job.solver;
  auto clusters = std::make_shared<const ClusterTree>(
      build_cluster_tree(mesh.dof_points(), mesh.dim(), s.n_min, mesh.dof_support_boxes()));
  const AdmissibilityCase c = s.admissibility_case;
  const BlockClusterTree a(clusters, stiffness_mode(c), s.eta, s.weak_threshold);
  const BlockClusterTree cf(clusters, correlation_mode(c), s.eta, s.weak_threshold);
  json j;
  j["case"] = to_string(c);
  j["stiffness"] = a.to_json();
  j["correlation"] = cf.to_json();
  write_text(job.out_dir / "partition.json", j.dump(1) + "\n");
  return exit_ok;
}

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string mesh_file;
  std::optional<int> level;
  std::string kernel;
  std::string corr_length;
  std::string admissibility_case;
  std::optional<int> workers;
  std::string levels;
  bool no_timings = false;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI configuration file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--mesh", o.mesh_file, "mesh file (instead of a generated mesh)");
  cmd->add_option("--level", o.level, "refinement level of the generated mesh");
  cmd->add_option("--kernel", o.kernel, "gaussian | exponential | matern52");
  cmd->add_option("--corr-length", o.corr_length, "correlation length: number, diam or diam/X");
  cmd->add_option("--case", o.admissibility_case, "all_eta | weak_fem | weak_cor");
  cmd->add_option("--workers", o.workers, "threads used for kernel assembly");
  cmd->add_flag("--no-timings", o.no_timings, "write NA instead of wall times");
}

JobConfig make_job(const std::string& command, const Overrides& o) {
  JobConfig job;
  job.command = command;
  if (!o.config.empty()) apply_config_file(o.config, job);
  if (!o.mesh_file.empty()) job.mesh.file = o.mesh_file;
  if (o.level) {
    if (!o.mesh_file.empty()) throw UsageError("--level and --mesh are mutually exclusive");
    job.mesh.file.reset();
    job.mesh.level = *o.level;
  }
  if (!o.kernel.empty()) job.kernel = parse_kernel_family(o.kernel);
  if (!o.corr_length.empty()) job.length = LengthSpec::parse(o.corr_length);
  if (!o.admissibility_case.empty()) job.solver.admissibility_case = parse_admissibility_case(o.admissibility_case);
  if (o.workers) job.solver.workers = *o.workers;
  if (!o.out.empty()) job.out_dir = o.out;
  if (o.no_timings) job.timings = false;
  if (!o.levels.empty()) {
    const auto colon = o.levels.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("no colon");
      job.level_min = std::stoi(o.levels.substr(0, colon));
      job.level_max = std::stoi(o.levels.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("--levels expects MIN:MAX");
    }
  }
  job.solver.validate();
  return job;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App cli{"Two-point correlation of elliptic PDE solutions with H-matrices"};
  cli.require_subcommand(1);
  Overrides o;
  CLI::App* solve = cli.add_subcommand("solve", "solve one problem; writes variance.csv, report.json, partition.json");
  CLI::App* compare = cli.add_subcommand("compare-admissibility", "run all admissibility cases; writes compare.csv");
  CLI::App* bench = cli.add_subcommand("bench-scaling", "level sweep with W11 errors; writes scaling.csv");
  CLI::App* dump = cli.add_subcommand("dump-partition", "block cluster trees as JSON; writes partition.json");
  for (CLI::App* c : {solve, compare, bench, dump}) add_common_options(c, o);
  bench->add_option("--levels", o.levels, "level range MIN:MAX (at least 3 levels)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return exit_usage;
  }

  try {
    CLI::App* cmd = cli.get_subcommands().front();
    const JobConfig job = make_job(cmd->get_name(), o);
    if (cmd == solve) return run_solve(job);
    if (cmd == compare) return run_compare_admissibility(job);
    if (cmd == bench) return run_bench_scaling(job);
    return run_dump_partition(job);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return exit_parse_error;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_diverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
}

}  // namespace hcorr::app
