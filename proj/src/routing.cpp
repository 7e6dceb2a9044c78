#include "capsroute/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "capsroute/scalar_math.hpp"

namespace capsroute {

OutputSet compute_outputs(const PredictionSet& preds, const CouplingMatrix& coupling) {
  if (static_cast<std::size_t>(coupling.rows()) != preds.num_input() ||
      static_cast<std::size_t>(coupling.cols()) != preds.num_output()) {
    throw Error(ErrorKind::kDimensionMismatch, "coupling shape does not match predictions");
  }
  std::vector<Vector> s, v;
  s.reserve(preds.num_output());
  v.reserve(preds.num_output());
  for (std::size_t j = 0; j < preds.num_output(); ++j) {
    s.push_back(preds.prediction(j) * coupling.values().col(static_cast<Eigen::Index>(j)));
    v.push_back(squash(s.back()));
  }
  return OutputSet(std::move(s), std::move(v));
}

RoutingState initial_state(const PredictionSet& preds) {
  CouplingMatrix c = uniform_coupling(preds.num_input(), preds.num_output());
  OutputSet out = compute_outputs(preds, c);
  return {LogitMatrix::zeros(preds.num_input(), preds.num_output()), std::move(c),
          std::move(out), 0};
}

RoutingState routing_step(const PredictionSet& preds, const RoutingState& state) {
  LogitMatrix b(state.logits.values() - grad_big_psi(preds, state.coupling));
  CouplingMatrix c = grad_big_phi(b);
  OutputSet out = compute_outputs(preds, c);
  return {std::move(b), std::move(c), std::move(out), state.iteration + 1};
}

namespace {

RoutingRecord make_record(std::size_t iteration, LogitMatrix logits, CouplingMatrix coupling,
                          OutputSet outputs, const RoutingRecord* prev) {
  RoutingRecord rec{iteration, std::move(logits), std::move(coupling), std::move(outputs),
                    {}, 0.0, {}, std::nullopt};
  double total = 0.0;
  for (const Vector& s : rec.outputs->net_inputs()) {
    const double n = s.norm();
    rec.net_input_norms.push_back(n);
    rec.per_capsule_energy.push_back(psi(n));
    total += rec.per_capsule_energy.back();
  }
  rec.total_energy = -total;
  if (prev) {
    const double step = (prev->coupling.values() - rec.coupling.values()).squaredNorm();
    rec.lyapunov_gap = prev->total_energy - rec.total_energy - step;
  }
  return rec;
}

void push_record(RoutingTrajectory& traj, RoutingRecord rec, const RoutingConfig& config) {
  if (!config.record_full_state) traj.strip_last();
  traj.append(std::move(rec));
}

bool should_stop(const RoutingTrajectory& traj, const RoutingConfig& config) {
  if (!config.stop_tolerance || traj.size() < 2) return false;
  const auto& recs = traj.records();
  const double delta =
      (recs[recs.size() - 1].coupling.values() - recs[recs.size() - 2].coupling.values()).norm();
  return delta < *config.stop_tolerance;
}

}  // namespace

RoutingTrajectory route_scalar(const PredictionSet& preds, const RoutingConfig& config) {
  config.validate();
  const std::size_t m = preds.num_input();
  const std::size_t n = preds.num_output();
  std::vector<double> b(m * n, 0.0);  // b[i * n + j]
  std::vector<double> c(m * n, 0.0);
  std::vector<std::vector<double>> s(n), v(n);
  for (std::size_t j = 0; j < n; ++j) {
    s[j].assign(preds.dim(j), 0.0);
    v[j].assign(preds.dim(j), 0.0);
  }

  RoutingTrajectory traj;
  for (std::size_t r = 0; r <= config.iterations; ++r) {
    // c_ij = exp(b_ij) / sum_k exp(b_ik), shifted by the row maximum.
    for (std::size_t i = 0; i < m; ++i) {
      double top = b[i * n];
      for (std::size_t k = 1; k < n; ++k) top = std::max(top, b[i * n + k]);
      double denom = 0.0;
      for (std::size_t k = 0; k < n; ++k) denom += std::exp(b[i * n + k] - top);
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = std::exp(b[i * n + j] - top) / denom;
    }
    // s_j = sum_i c_ij u_{j|i}
    for (std::size_t j = 0; j < n; ++j) {
      const Matrix& u = preds.prediction(j);
      for (std::size_t d = 0; d < preds.dim(j); ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          acc += c[i * n + j] * u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i));
        }
        s[j][d] = acc;
      }
    }
    // v_j = ||s_j||^2 / (1 + ||s_j||^2) * s_j / ||s_j||
    for (std::size_t j = 0; j < n; ++j) {
      double sq = 0.0;
      for (double x : s[j]) sq += x * x;
      const double norm = std::sqrt(sq);
      for (std::size_t d = 0; d < preds.dim(j); ++d) {
        v[j][d] = norm == 0.0 ? 0.0 : sq / (1.0 + sq) * s[j][d] / norm;
      }
    }

    Matrix bm(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    Matrix cm(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        bm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b[i * n + j];
        cm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[i * n + j];
      }
    }
    std::vector<Vector> sv(n), vv(n);
    for (std::size_t j = 0; j < n; ++j) {
      sv[j] = Eigen::Map<const Vector>(s[j].data(), static_cast<Eigen::Index>(s[j].size()));
      vv[j] = Eigen::Map<const Vector>(v[j].data(), static_cast<Eigen::Index>(v[j].size()));
    }
    const RoutingRecord* prev = traj.empty() ? nullptr : &traj.back();
    push_record(traj,
                make_record(r, LogitMatrix(std::move(bm)), CouplingMatrix(std::move(cm)),
                            OutputSet(std::move(sv), std::move(vv)), prev),
                config);
    if (should_stop(traj, config) || r == config.iterations) break;

    // b_ij <- b_ij + u_{j|i} . v_j
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const Matrix& u = preds.prediction(j);
        double agree = 0.0;
        for (std::size_t d = 0; d < preds.dim(j); ++d) {
          agree += u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) * v[j][d];
        }
        b[i * n + j] += agree;
      }
    }
  }
  return traj;
}

RoutingTrajectory route_matrix(const PredictionSet& preds, const RoutingConfig& config) {
  config.validate();
  RoutingTrajectory traj;
  RoutingState state = initial_state(preds);
  while (true) {
    const RoutingRecord* prev = traj.empty() ? nullptr : &traj.back();
    push_record(traj, make_record(state.iteration, state.logits, state.coupling, state.outputs, prev),
                config);
    if (should_stop(traj, config) || state.iteration == config.iterations) break;
    state = routing_step(preds, state);
  }
  return traj;
}

std::pair<Matrix, Matrix> nonlinear_gd_step(const MatrixMap& mirror_grad,
                                            const MatrixMap& energy_grad, const Matrix& u,
                                            double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorKind::kInvalidArgument, "nonlinear_gd_step: eta must be finite and >= 0");
  }
  const Matrix x = mirror_grad(u);
  const Matrix g = energy_grad(x);
  if (g.rows() != u.rows() || g.cols() != u.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "nonlinear_gd_step: gradient shape differs from u");
  }
  if (!g.allFinite()) throw Error(ErrorKind::kNonFinite, "nonlinear_gd_step: non-finite gradient");
  Matrix u_next = u - eta * g;
  Matrix x_next = mirror_grad(u_next);
  return {std::move(u_next), std::move(x_next)};
}

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

GapReport mismatch(std::size_t r, const std::string& what) {
  return GapReport::upper(std::numeric_limits<double>::infinity(), kEquivalenceTolerance,
                          "iteration " + std::to_string(r) + ": " + what);
}

}  // namespace

GapReport compare_trajectories(const RoutingTrajectory& a, const RoutingTrajectory& b,
                               double tolerance) {
  if (a.size() != b.size()) {
    return GapReport::upper(std::numeric_limits<double>::infinity(), tolerance,
                            "length " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double worst = 0.0;
  std::size_t worst_at = 0;
  auto track = [&](double d, std::size_t r) {
    if (!(d <= worst)) {  // NaN counts as worse
      worst = d;
      worst_at = r;
    }
  };
  for (std::size_t r = 0; r < a.size(); ++r) {
    const RoutingRecord& ra = a[r];
    const RoutingRecord& rb = b[r];
    if (ra.coupling.rows() != rb.coupling.rows() || ra.coupling.cols() != rb.coupling.cols()) {
      return mismatch(r, "coupling shapes differ");
    }
    track(max_abs_diff(ra.coupling.values(), rb.coupling.values()), r);
    if (ra.logits.has_value() != rb.logits.has_value()) return mismatch(r, "logits recorded on one side only");
    if (ra.logits) track(max_abs_diff(ra.logits->values(), rb.logits->values()), r);
    if (ra.outputs.has_value() != rb.outputs.has_value()) return mismatch(r, "outputs recorded on one side only");
    if (ra.outputs) {
      const auto& va = ra.outputs->outputs();
      const auto& vb = rb.outputs->outputs();
      if (va.size() != vb.size()) return mismatch(r, "output counts differ");
      for (std::size_t j = 0; j < va.size(); ++j) {
        if (va[j].size() != vb[j].size()) return mismatch(r, "output dims differ");
        track(max_abs_diff(va[j], vb[j]), r);
      }
    }
  }
  return GapReport::upper(worst, tolerance, "iteration " + std::to_string(worst_at));
}

}  // namespace capsroute
