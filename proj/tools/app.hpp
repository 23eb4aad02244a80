#pragma once

#include "hcorr/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hcorr::app {

/// Exit codes of the command line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_parse_error = 2,
  exit_not_converged = 3,
  exit_diverged = 4,
  exit_usage = 64,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

struct MeshSource {
  std::optional<std::filesystem::path> file;
  MeshShape shape = MeshShape::unit_square;
  int level = 3;
};

/// Correlation length as an absolute value or as diam(D) / divisor.
struct LengthSpec {
  double value = 1.0;
  bool relative_to_diameter = false;

  static LengthSpec parse(const std::string& text);
  double resolve(const Mesh& mesh) const;
  std::string to_string() const;
};

struct JobConfig {
  std::string command;
  MeshSource mesh;
  KernelFamily kernel = KernelFamily::gaussian;
  LengthSpec length;
  SolverConfig solver;
  double mean_load = 0.0;
  std::filesystem::path out_dir = ".";
  bool timings = true;
  int level_min = 1;
  int level_max = 4;
  /// Reference solves with at most this many DoFs use pivoted Cholesky.
  index_t cholesky_max_dofs = 5000;
  double cholesky_rel_tol = 1e-10;
};

/// Parses an INI file (sections mesh, kernel, solver, problem, bench, output).
/// Throws ParseError for unreadable or malformed files and unknown keys.
void apply_config_file(const std::filesystem::path& path, JobConfig& job);

Mesh build_mesh(const MeshSource& source);

/// Number formatting used in every artifact.
std::string format_seconds(double seconds);
std::string format_number(double value);

int run_solve(const JobConfig& job);
int run_compare_admissibility(const JobConfig& job);
int run_bench_scaling(const JobConfig& job);
int run_dump_partition(const JobConfig& job);

/// Parses arguments, runs the command and maps errors to exit codes.
int run_cli(int argc, char** argv);

}  // namespace hcorr::app
