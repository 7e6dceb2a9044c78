#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capsroute/energy.hpp"

namespace capsroute::cli {

struct SizeRange {
  std::size_t lo = 2;
  std::size_t hi = 16;
};

struct CheckOptions {
  std::size_t seeds = 100;
  std::uint64_t base_seed = 0;
  SizeRange num_input{2, 16};
  SizeRange num_output{2, 16};
  SizeRange dim{2, 8};
  /// Lyapunov tolerance; the other checks use their fixed tolerances.
  double tolerance = kLyapunovTolerance;
  std::size_t iterations = 20;
  std::size_t chord_samples = 200;
  std::size_t squash_samples = 10;
  /// All-zero predictions instead of random ones.
  bool zero_family = false;
  unsigned jobs = 1;
};

struct CheckResult {
  std::uint64_t seed = 0;
  std::size_t num_input = 0;
  std::size_t num_output = 0;
  std::size_t dim = 0;
  std::string check;
  GapReport report;
};

struct CheckAggregate {
  std::string check;
  std::size_t runs = 0;
  std::size_t failures = 0;
  /// Least favourable value seen: minimum for lower bounds, maximum otherwise.
  double worst = 0.0;
  std::uint64_t worst_seed = 0;
};

struct CheckSummary {
  std::vector<CheckResult> results;  // seed order, then check order

  bool all_passed() const;
  std::vector<CheckAggregate> aggregate() const;
  /// seed,num_input,num_output,dim,check,value,tolerance,passed
  std::string csv() const;
};

/// Names of the checks run for every seed, in output order.
const std::vector<std::string>& check_names();

/// Runs every check over seeds base_seed .. base_seed + seeds - 1. Instance
/// sizes are drawn from each seed, so results do not depend on `jobs`.
CheckSummary run_check_suite(const CheckOptions& options);

}  // namespace capsroute::cli
