#include "capsroute/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "capsroute/random.hpp"
#include "capsroute/routing.hpp"

namespace capsroute {

PredictionSet gen_random_instance(std::size_t num_input, std::size_t num_output,
                                  std::size_t dim, double scale, std::uint64_t seed) {
  if (num_input == 0 || num_output == 0 || dim == 0) {
    throw Error(ErrorKind::kEmpty, "gen_random_instance: M, N and dim must be >= 1");
  }
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kInvalidArgument, "gen_random_instance: scale must be finite and >= 0");
  }
  Rng rng(seed);
  std::vector<Matrix> data;
  data.reserve(num_output);
  const auto rows = static_cast<Eigen::Index>(dim);
  const auto cols = static_cast<Eigen::Index>(num_input);
  for (std::size_t j = 0; j < num_output; ++j) {
    Matrix u(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) u(r, c) = scale * (2.0 * rng.uniform01() - 1.0);
    }
    data.push_back(std::move(u));
  }
  return PredictionSet::uniform(num_input, num_output, dim, std::move(data));
}

PredictionSet gen_ring_instance(std::size_t num_input, const std::vector<double>& radii,
                                double noise, std::uint64_t seed) {
  if (num_input == 0) throw Error(ErrorKind::kEmpty, "gen_ring_instance: M must be >= 1");
  if (radii.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "gen_ring_instance: need at least 2 clusters");
  }
  for (double r : radii) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorKind::kInvalidArgument, "gen_ring_instance: radii must be finite and >= 0");
    }
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw Error(ErrorKind::kInvalidArgument, "gen_ring_instance: noise must be finite and >= 0");
  }
  const std::size_t n = radii.size();
  Rng rng(seed);
  std::vector<Matrix> data;
  data.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    const double cx = radii[j] * std::cos(angle);
    const double cy = radii[j] * std::sin(angle);
    Matrix u(2, static_cast<Eigen::Index>(num_input));
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      // Draw both coordinates even when noise is zero so the stream layout
      // does not depend on it.
      const double dx = rng.normal();
      const double dy = rng.normal();
      u(0, i) = cx + noise * dx;
      u(1, i) = cy + noise * dy;
    }
    data.push_back(std::move(u));
  }
  return PredictionSet::uniform(num_input, n, 2, std::move(data));
}

Provenance describe(const PredictionSet& preds, std::string generator, std::uint64_t seed) {
  Provenance p;
  p.generator = std::move(generator);
  p.seed = seed;
  p.num_input = preds.num_input();
  p.dims = preds.dims();
  return p;
}

PolarizationMetrics polarization_metrics(const RoutingTrajectory& traj) {
  PolarizationMetrics out;
  for (const RoutingRecord& rec : traj.records()) {
    const Matrix& c = rec.coupling.values();
    const auto n = static_cast<double>(c.cols());
    // H(c) = ln N - KL(c || uniform). A constant row on the simplex is the
    // uniform distribution, whose divergence is exactly zero, so uniform
    // couplings report ln N without rounding.
    double divergence_sum = 0.0;
    std::vector<double> row_max(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      row_max[static_cast<std::size_t>(i)] = c.row(i).maxCoeff();
      if (row_max[static_cast<std::size_t>(i)] == c.row(i).minCoeff()) continue;
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double p = c(i, j);
        if (p > 0.0) divergence_sum += p * std::log(n * p);
      }
    }
    const auto rows = static_cast<double>(c.rows());
    out.row_entropy_mean.push_back(std::log(n) - divergence_sum / rows);
    double mean_max = 0.0;
    for (double x : row_max) mean_max += x;
    out.max_coupling_mean.push_back(mean_max / rows);
    out.max_coupling.push_back(std::move(row_max));
  }
  return out;
}

const std::vector<double>& ExperimentReport::find_series(const std::string& wanted) const {
  for (const NamedSeries& s : series) {
    if (s.name == wanted) return s.values;
  }
  throw Error(ErrorKind::kInvalidArgument, "no series named '" + wanted + "'");
}

namespace {

ExperimentReport run_common(std::string name, const PredictionSet& preds, std::size_t iterations,
                            Provenance provenance) {
  ExperimentReport rep;
  rep.name = std::move(name);
  if (provenance.dims.empty()) {
    provenance.num_input = preds.num_input();
    provenance.dims = preds.dims();
  }
  rep.provenance = std::move(provenance);
  rep.config.iterations = iterations;
  rep.config.record_full_state = true;
  rep.trajectory = route_matrix(preds, rep.config);

  const auto& recs = rep.trajectory.records();
  const std::size_t n = preds.num_output();

  NamedSeries total{"total_agreement", {}};
  std::vector<NamedSeries> per_capsule(n), norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    per_capsule[j].name = "agreement_" + std::to_string(j);
    norms[j].name = "norm_v_" + std::to_string(j);
  }
  rep.min_lyapunov_gap = std::numeric_limits<double>::infinity();
  for (const RoutingRecord& rec : recs) {
    total.values.push_back(-rec.total_energy);
    for (std::size_t j = 0; j < n; ++j) {
      per_capsule[j].values.push_back(rec.per_capsule_energy[j]);
      norms[j].values.push_back(rec.outputs->outputs()[j].norm());
    }
    if (rec.lyapunov_gap) rep.min_lyapunov_gap = std::min(rep.min_lyapunov_gap, *rec.lyapunov_gap);
  }
  for (std::size_t r = 1; r < total.values.size(); ++r) {
    if (total.values[r] < total.values[r - 1]) rep.agreement_nondecreasing = false;
  }
  PolarizationMetrics pol = polarization_metrics(rep.trajectory);

  rep.series.push_back(std::move(total));
  for (auto& s : per_capsule) rep.series.push_back(std::move(s));
  for (auto& s : norms) rep.series.push_back(std::move(s));
  rep.series.push_back({"row_entropy_mean", std::move(pol.row_entropy_mean)});
  rep.series.push_back({"max_coupling_mean", std::move(pol.max_coupling_mean)});

  rep.final_outputs = *rep.trajectory.back().outputs;
  for (std::size_t j = 0; j < n; ++j) {
    if (rep.trajectory.back().per_capsule_energy[j] < kCollapseThreshold) {
      rep.collapsed_capsules.push_back(j);
    }
  }
  return rep;
}

}  // namespace

ExperimentReport run_numerical_experiment(const PredictionSet& preds, std::size_t iterations,
                                          Provenance provenance) {
  return run_common("numerical", preds, iterations, std::move(provenance));
}

ExperimentReport run_distribution_experiment(const PredictionSet& preds, std::size_t iterations,
                                             Provenance provenance) {
  for (std::size_t j = 0; j < preds.num_output(); ++j) {
    if (preds.dim(j) != 2) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "distribution experiment needs 2-D capsules; capsule " + std::to_string(j) +
                      " has dimension " + std::to_string(preds.dim(j)),
                  j);
    }
  }
  ExperimentReport rep = run_common("distribution", preds, iterations, std::move(provenance));
  const std::size_t n = preds.num_output();
  for (std::size_t j = 0; j < n; ++j) {
    NamedSeries xs{"v_" + std::to_string(j) + "_x", {}};
    NamedSeries ys{"v_" + std::to_string(j) + "_y", {}};
    for (const RoutingRecord& rec : rep.trajectory.records()) {
      const Vector& v = rec.outputs->outputs()[j];
      xs.values.push_back(v[0]);
      ys.values.push_back(v[1]);
    }
    rep.series.push_back(std::move(xs));
    rep.series.push_back(std::move(ys));

    const double norm = rep.final_outputs.outputs()[j].norm();
    if (norm < kSuppressedOutputThreshold) rep.suppressed_capsules.push_back(j);
    if (norm > kUnitOutputThreshold) rep.unit_capsules.push_back(j);

    const Matrix& u = preds.prediction(j);
    for (Eigen::Index i = 0; i < u.cols(); ++i) rep.scatter.push_back({j, u(0, i), u(1, i)});
  }
  return rep;
}

}  // namespace capsroute
