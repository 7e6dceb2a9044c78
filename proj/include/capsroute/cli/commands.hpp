#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capsroute/cli/check_suite.hpp"
#include "capsroute/experiments.hpp"

namespace capsroute::cli {

enum class ExitStatus : int {
  kSuccess = 0,
  kInvariantViolation = 1,
  kUsageError = 2,
};

inline int to_int(ExitStatus s) { return static_cast<int>(s); }

/// Generator arguments shared by `gen` and `experiment`.
struct GenOptions {
  std::string kind = "random";  // random | ring
  std::optional<std::size_t> num_input;
  std::size_t num_output = 3;
  std::size_t dim = 2;
  double scale = 1.0;
  std::vector<double> radii{0.0, 1.0, 1.0, 1.0};
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct GenCommand {
  GenOptions gen;
  std::filesystem::path out;
};

struct RouteCommand {
  std::filesystem::path input;
  std::size_t iterations = 3;
  std::string form = "both";  // scalar | matrix | both
  std::filesystem::path out_csv;
  std::optional<std::filesystem::path> out_couplings;
  std::optional<std::filesystem::path> out_svg;
  std::optional<double> stop_tolerance;
};

struct ExperimentCommand {
  std::string name;  // numerical | distribution
  std::optional<std::filesystem::path> input;
  GenOptions gen;
  std::size_t iterations = 20;
  std::filesystem::path out_dir;
};

struct CheckCommand {
  CheckOptions options;
  std::optional<std::filesystem::path> out_csv;
};

/// Builds the instance described by `opts`; throws Error on bad arguments.
PredictionSet generate(const GenOptions& opts, std::string* kind_out = nullptr);

ExitStatus cmd_gen(const GenCommand& cmd, std::ostream& out, std::ostream& err);
ExitStatus cmd_route(const RouteCommand& cmd, std::ostream& out, std::ostream& err);
ExitStatus cmd_experiment(const ExperimentCommand& cmd, std::ostream& out, std::ostream& err);
ExitStatus cmd_check(const CheckCommand& cmd, std::ostream& out, std::ostream& err);

/// iteration,capsule,psi_sj,norm_vj,row_entropy_mean,total_agreement,lyapunov_gap
std::string trajectory_csv(const RoutingTrajectory& traj);

/// {"iterations": [{"iteration": r, "B": [[...]], "C": [[...]]}, ...]}
std::string couplings_json(const RoutingTrajectory& traj);

/// {provenance, config, series, flags, gaps, final_outputs[, scatter]}
std::string report_json(const ExperimentReport& report);

/// iteration followed by one column per series.
std::string series_csv(const ExperimentReport& report);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace capsroute::cli
