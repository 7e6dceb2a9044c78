#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "capsroute/types.hpp"

namespace capsroute {

/// Entries i.i.d. uniform on [-scale, scale], drawn in capsule, row, column
/// order from one seeded stream.
PredictionSet gen_random_instance(std::size_t num_input, std::size_t num_output,
                                  std::size_t dim, double scale, std::uint64_t seed);

/// Two-dimensional clusters: capsule j's M columns are its center plus
/// isotropic Gaussian noise of standard deviation `noise`. Capsule 0 sits at
/// radius radii[0] on angle 0; capsule j >= 1 sits at angle 2*pi*j/N and
/// radius radii[j].
PredictionSet gen_ring_instance(std::size_t num_input, const std::vector<double>& radii,
                                double noise, std::uint64_t seed);

/// Where an instance came from, carried into reports.
struct Provenance {
  std::string generator = "file";
  std::uint64_t seed = 0;
  std::size_t num_input = 0;
  std::vector<std::size_t> dims;
  std::map<std::string, std::string> params;
};

Provenance describe(const PredictionSet& preds, std::string generator = "file",
                    std::uint64_t seed = 0);

/// Mean row entropy of C (nats) and the largest coupling of every row, per
/// recorded iteration.
struct PolarizationMetrics {
  std::vector<double> row_entropy_mean;
  std::vector<std::vector<double>> max_coupling;  // [iteration][row]
  std::vector<double> max_coupling_mean;
};

PolarizationMetrics polarization_metrics(const RoutingTrajectory& traj);

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

/// Final psi(||s_j||) below this marks capsule j as collapsed.
inline constexpr double kCollapseThreshold = 0.01;

/// Final ||v_j|| below this marks a capsule as suppressed in the 2-D
/// experiment; above kUnitOutputThreshold it counts as an almost-unit output.
inline constexpr double kSuppressedOutputThreshold = 0.2;
inline constexpr double kUnitOutputThreshold = 0.6;

struct ScatterPoint {
  std::size_t capsule = 0;
  double x = 0.0;
  double y = 0.0;
};

struct ExperimentReport {
  std::string name;
  Provenance provenance;
  RoutingConfig config;
  RoutingTrajectory trajectory;
  /// Per-iteration series, in a fixed order.
  std::vector<NamedSeries> series;
  OutputSet final_outputs{{}, {}};
  std::vector<std::size_t> collapsed_capsules;
  /// Distribution experiment only.
  std::vector<std::size_t> suppressed_capsules;
  std::vector<std::size_t> unit_capsules;
  std::vector<ScatterPoint> scatter;
  /// Smallest Lyapunov gap over the run (+inf for a single record).
  double min_lyapunov_gap = 0.0;
  bool agreement_nondecreasing = true;

  const std::vector<double>& find_series(const std::string& name) const;
};

/// Matrix routing for K iterations with agreement, per-capsule agreement,
/// output-norm and polarization series.
ExperimentReport run_numerical_experiment(const PredictionSet& preds, std::size_t iterations,
                                          Provenance provenance = {});

/// Same run on a 2-D instance, plus per-iteration v_j coordinates and the
/// prediction scatter. Rejects instances with any D_j != 2.
ExperimentReport run_distribution_experiment(const PredictionSet& preds, std::size_t iterations,
                                             Provenance provenance = {});

}  // namespace capsroute
