#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "capsroute/error.hpp"

namespace capsroute {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-sum tolerance for coupling matrices. Rows within it are renormalized,
/// rows outside it are rejected.
inline constexpr double kRowSumTolerance = 1e-12;

/// Unvalidated instance as read from disk or built by hand.
struct RawPredictionSet {
  std::size_t num_input = 0;
  std::size_t num_output = 0;
  std::vector<std::size_t> dims;
  std::vector<Matrix> predictions;
};

/// The prediction matrices U_j, one D_j x M matrix per output capsule j.
/// Column i of U_j is the vote of input capsule i for output capsule j.
/// Output dimensions may differ between capsules.
class PredictionSet {
 public:
  /// Builds from per-capsule matrices; M is taken from the first matrix.
  static PredictionSet from_matrices(std::vector<Matrix> predictions);

  /// Uniform-D convenience: `data[j]` is the D x M matrix of capsule j.
  static PredictionSet uniform(std::size_t num_input, std::size_t num_output,
                               std::size_t dim, std::vector<Matrix> data);

  /// All-zero predictions of the given shape.
  static PredictionSet zeros(std::size_t num_input,
                             const std::vector<std::size_t>& dims);

  std::size_t num_input() const noexcept { return num_input_; }
  std::size_t num_output() const noexcept { return predictions_.size(); }
  std::size_t dim(std::size_t j) const { return dims_.at(j); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const Matrix& prediction(std::size_t j) const { return predictions_.at(j); }
  const std::vector<Matrix>& predictions() const noexcept { return predictions_; }

  bool operator==(const PredictionSet& other) const;

 private:
  friend PredictionSet validate_prediction_set(RawPredictionSet raw);
  PredictionSet() = default;

  std::size_t num_input_ = 0;
  std::vector<std::size_t> dims_;
  std::vector<Matrix> predictions_;
};

/// Checks every PredictionSet invariant. Errors name the offending capsule.
PredictionSet validate_prediction_set(RawPredictionSet raw);

/// Row-stochastic M x N matrix of coupling coefficients.
class CouplingMatrix {
 public:
  /// Rejects negative entries and rows whose sum is off by more than
  /// kRowSumTolerance; renormalizes the rest.
  explicit CouplingMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Matrix values_;
};

/// Every entry equal to 1/N: the softmax of an all-zero logit matrix.
CouplingMatrix uniform_coupling(std::size_t num_input, std::size_t num_output);

/// M x N routing logits.
class LogitMatrix {
 public:
  explicit LogitMatrix(Matrix values);
  static LogitMatrix zeros(std::size_t num_input, std::size_t num_output);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Matrix values_;
};

/// Net inputs s_j and squashed outputs v_j of the output capsules.
class OutputSet {
 public:
  OutputSet(std::vector<Vector> net_inputs, std::vector<Vector> outputs);

  const std::vector<Vector>& net_inputs() const noexcept { return net_inputs_; }
  const std::vector<Vector>& outputs() const noexcept { return outputs_; }
  std::size_t size() const noexcept { return outputs_.size(); }

 private:
  std::vector<Vector> net_inputs_;
  std::vector<Vector> outputs_;
};

struct RoutingConfig {
  std::size_t iterations = 3;
  /// Early stop once ||C(r+1) - C(r)||_F falls below this value.
  std::optional<double> stop_tolerance;
  /// When false, logits and outputs are kept for the final record only.
  bool record_full_state = true;

  void validate() const;
};

struct RoutingRecord {
  std::size_t iteration = 0;
  std::optional<LogitMatrix> logits;
  CouplingMatrix coupling;
  std::optional<OutputSet> outputs;
  /// ||s_j(r)|| per output capsule.
  std::vector<double> net_input_norms;
  /// Psi(C(r)).
  double total_energy = 0.0;
  /// psi(||s_j(r)||) per output capsule.
  std::vector<double> per_capsule_energy;
  /// Psi(C(r-1)) - Psi(C(r)) - ||C(r-1) - C(r)||_F^2, absent at r = 0.
  std::optional<double> lyapunov_gap;
};

/// Consecutive routing records starting at iteration 0.
class RoutingTrajectory {
 public:
  /// Appends after checking the index and energy-sum invariants.
  void append(RoutingRecord record);

  const std::vector<RoutingRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const RoutingRecord& back() const { return records_.back(); }
  const RoutingRecord& operator[](std::size_t r) const { return records_.at(r); }

  /// Drops logits and outputs from the last record, used when a newer record
  /// takes over as the final one and full state is not requested.
  void strip_last();

 private:
  std::vector<RoutingRecord> records_;
};

}  // namespace capsroute
