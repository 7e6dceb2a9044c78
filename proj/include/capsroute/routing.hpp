#pragma once

#include <functional>
#include <utility>

#include "capsroute/energy.hpp"
#include "capsroute/types.hpp"

namespace capsroute {

/// Loop state of the matrix routing procedure. C is always softmax(B) and the
/// outputs are computed from C.
struct RoutingState {
  LogitMatrix logits;
  CouplingMatrix coupling;
  OutputSet outputs;
  std::size_t iteration = 0;
};

/// s_j = U_j C(:,j) and v_j = squash(s_j) for every output capsule.
OutputSet compute_outputs(const PredictionSet& preds, const CouplingMatrix& coupling);

/// B = 0, C uniform, outputs from the uniform coupling.
RoutingState initial_state(const PredictionSet& preds);

/// B <- B - grad Psi(C), C <- grad Phi(B), outputs recomputed.
RoutingState routing_step(const PredictionSet& preds, const RoutingState& state);

// Both routing forms record iterations 0..K: record r holds B(r), C(r) =
// softmax(B(r)) and the outputs computed from C(r). No logit update follows
// the last output computation. With a stop tolerance set, the run ends at
// the first r >= 1 where ||C(r) - C(r-1)||_F < tolerance.

/// Routing with explicit per-coefficient loops over b_ij, c_ij, s_j and v_j.
RoutingTrajectory route_scalar(const PredictionSet& preds, const RoutingConfig& config);

/// Routing through the matrix energies: C = grad Phi(B), B <- B - grad Psi(C).
RoutingTrajectory route_matrix(const PredictionSet& preds, const RoutingConfig& config);

using MatrixMap = std::function<Matrix(const Matrix&)>;

/// One step of nonlinear (mirror) gradient descent:
///   x = mirror_grad(u), u_next = u - eta * energy_grad(x),
///   x_next = mirror_grad(u_next). Returns (u_next, x_next).
std::pair<Matrix, Matrix> nonlinear_gd_step(const MatrixMap& mirror_grad,
                                            const MatrixMap& energy_grad,
                                            const Matrix& u, double eta);

inline constexpr double kEquivalenceTolerance = 1e-12;

/// Largest entrywise |a - b| over the recorded logits, couplings and outputs.
/// Length or shape disagreement yields a failed report naming the iteration.
GapReport compare_trajectories(const RoutingTrajectory& a, const RoutingTrajectory& b,
                               double tolerance = kEquivalenceTolerance);

}  // namespace capsroute
