#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "capsroute/types.hpp"

namespace capsroute {

/// Outcome of a numerical diagnostic.
///
/// Lower-bound reports pass when `value >= -tolerance` (a slack that should be
/// nonnegative). Upper-bound reports carry a nonnegative discrepancy and pass
/// when `value <= tolerance`. Two-sided reports pass when |value| <= tolerance.
struct GapReport {
  enum class Bound { kLower, kUpper, kTwoSided };

  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  Bound bound = Bound::kLower;
  std::string context;

  static GapReport lower(double value, double tolerance, std::string context);
  static GapReport upper(double value, double tolerance, std::string context);
  static GapReport two_sided(double value, double tolerance, std::string context);
};

inline constexpr double kLyapunovTolerance = 1e-9;
inline constexpr double kFenchelTolerance = 1e-10;
inline constexpr double kConvexityTolerance = 1e-12;
inline constexpr double kFiniteDifferenceStep = 1e-5;

// Psi(C) = -sum_j psi(||U_j C(:,j)||). The raw-matrix overloads accept any
// M x N matrix, which finite-difference and chord probes need.
double big_psi(const PredictionSet& preds, const Matrix& coupling);
double big_psi(const PredictionSet& preds, const CouplingMatrix& coupling);

/// Column j is -U_j^T squash(U_j C(:,j)).
Matrix grad_big_psi(const PredictionSet& preds, const Matrix& coupling);
Matrix grad_big_psi(const PredictionSet& preds, const CouplingMatrix& coupling);

/// Phi(B) = sum_i log_sum_exp(B(i,:)).
double big_phi(const Matrix& logits);
double big_phi(const LogitMatrix& logits);

/// Row-wise softmax of B.
CouplingMatrix grad_big_phi(const Matrix& logits);
CouplingMatrix grad_big_phi(const LogitMatrix& logits);

/// Phi*(C) = sum_i neg_entropy(C(i,:)). The raw overload throws kOffSimplex
/// for rows off the simplex.
double big_phi_star(const CouplingMatrix& coupling);
double big_phi_star(const Matrix& coupling);

/// log_sum_exp(x) + neg_entropy(y) - x.y, nonnegative by Fenchel-Young.
/// With `equality_case` set (y = softmax(x)) the report is two-sided.
GapReport fenchel_gap(const Vector& x, const Vector& y, bool equality_case = false);

/// Psi(C_prev) - Psi(C_next) - ||C_prev - C_next||_F^2 against kLyapunovTolerance.
GapReport lyapunov_gap(const PredictionSet& preds, const CouplingMatrix& prev,
                       const CouplingMatrix& next,
                       double tolerance = kLyapunovTolerance);

using MatrixFunction = std::function<double(const Matrix&)>;

/// Central-difference gradient of `f` at `at`.
Matrix fd_gradient(const MatrixFunction& f, const Matrix& at,
                   double step = kFiniteDifferenceStep);

/// ||a - b||_F / max(||b||_F, 1e-300); zero when both are zero.
double relative_error(const Matrix& a, const Matrix& b);

using VectorFunction = std::function<double(const Vector&)>;

struct ChordProbeOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double box = 5.0;
  double tolerance = kConvexityTolerance;
};

/// Minimum chord slack (1-t) f(x) + t f(y) - f((1-t) x + t y) over seeded
/// pairs in [-box, box]^dim and t in {0.25, 0.5, 0.75}.
GapReport chord_convexity_probe(const VectorFunction& f, std::size_t dim,
                                const ChordProbeOptions& options);

/// -Psi as a function of the flattened (column-major) coupling matrix.
VectorFunction negated_big_psi_function(const PredictionSet& preds);

}  // namespace capsroute
