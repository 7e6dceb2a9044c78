#include "capsroute/types.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace capsroute {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kEmpty: return "empty input";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kOffSimplex: return "off simplex";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what,
             std::optional<std::size_t> capsule)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      capsule_(capsule) {}

namespace {

std::string capsule_msg(std::size_t j, const std::string& detail) {
  std::ostringstream os;
  os << "capsule " << j << ": " << detail;
  return os.str();
}

}  // namespace

PredictionSet validate_prediction_set(RawPredictionSet raw) {
  if (raw.num_input == 0) {
    throw Error(ErrorKind::kEmpty, "num_input must be at least 1");
  }
  if (raw.num_output == 0) {
    throw Error(ErrorKind::kEmpty, "num_output must be at least 1");
  }
  if (raw.dims.size() != raw.num_output) {
    throw Error(ErrorKind::kDimensionMismatch,
                "dims has " + std::to_string(raw.dims.size()) +
                    " entries, expected " + std::to_string(raw.num_output));
  }
  if (raw.predictions.size() != raw.num_output) {
    // The first missing capsule is the offender.
    const std::size_t j = std::min(raw.predictions.size(), raw.num_output);
    throw Error(ErrorKind::kDimensionMismatch,
                "predictions has " + std::to_string(raw.predictions.size()) +
                    " entries, expected " + std::to_string(raw.num_output),
                j);
  }
  for (std::size_t j = 0; j < raw.num_output; ++j) {
    const Matrix& u = raw.predictions[j];
    if (raw.dims[j] == 0) {
      throw Error(ErrorKind::kEmpty, capsule_msg(j, "dimension must be at least 1"), j);
    }
    if (static_cast<std::size_t>(u.rows()) != raw.dims[j] ||
        static_cast<std::size_t>(u.cols()) != raw.num_input) {
      std::ostringstream os;
      os << "matrix is " << u.rows() << "x" << u.cols() << ", expected "
         << raw.dims[j] << "x" << raw.num_input;
      throw Error(ErrorKind::kDimensionMismatch, capsule_msg(j, os.str()), j);
    }
    if (!u.allFinite()) {
      throw Error(ErrorKind::kNonFinite, capsule_msg(j, "prediction contains NaN or Inf"), j);
    }
  }
  PredictionSet out;
  out.num_input_ = raw.num_input;
  out.dims_ = std::move(raw.dims);
  out.predictions_ = std::move(raw.predictions);
  return out;
}

PredictionSet PredictionSet::from_matrices(std::vector<Matrix> predictions) {
  RawPredictionSet raw;
  raw.num_output = predictions.size();
  raw.num_input = predictions.empty() ? 0 : static_cast<std::size_t>(predictions[0].cols());
  for (const auto& u : predictions) raw.dims.push_back(static_cast<std::size_t>(u.rows()));
  raw.predictions = std::move(predictions);
  return validate_prediction_set(std::move(raw));
}

PredictionSet PredictionSet::uniform(std::size_t num_input, std::size_t num_output,
                                     std::size_t dim, std::vector<Matrix> data) {
  RawPredictionSet raw;
  raw.num_input = num_input;
  raw.num_output = num_output;
  raw.dims.assign(num_output, dim);
  raw.predictions = std::move(data);
  return validate_prediction_set(std::move(raw));
}

PredictionSet PredictionSet::zeros(std::size_t num_input,
                                   const std::vector<std::size_t>& dims) {
  RawPredictionSet raw;
  raw.num_input = num_input;
  raw.num_output = dims.size();
  raw.dims = dims;
  for (std::size_t d : dims) {
    raw.predictions.push_back(Matrix::Zero(static_cast<Eigen::Index>(d),
                                           static_cast<Eigen::Index>(num_input)));
  }
  return validate_prediction_set(std::move(raw));
}

bool PredictionSet::operator==(const PredictionSet& other) const {
  if (num_input_ != other.num_input_ || dims_ != other.dims_) return false;
  for (std::size_t j = 0; j < predictions_.size(); ++j) {
    if (predictions_[j] != other.predictions_[j]) return false;
  }
  return true;
}

CouplingMatrix::CouplingMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorKind::kEmpty, "coupling matrix must be non-empty");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "coupling matrix contains NaN or Inf");
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    if ((values_.row(i).array() < 0.0).any()) {
      throw Error(ErrorKind::kOffSimplex,
                  "coupling row " + std::to_string(i) + " has a negative entry");
    }
    const double sum = values_.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "coupling row " << i << " sums to " << sum;
      throw Error(ErrorKind::kOffSimplex, os.str());
    }
    if (sum != 1.0) values_.row(i) /= sum;
  }
}

CouplingMatrix uniform_coupling(std::size_t num_input, std::size_t num_output) {
  if (num_input == 0 || num_output == 0) {
    throw Error(ErrorKind::kEmpty, "uniform_coupling needs M, N >= 1");
  }
  return CouplingMatrix(Matrix::Constant(static_cast<Eigen::Index>(num_input),
                                         static_cast<Eigen::Index>(num_output),
                                         1.0 / static_cast<double>(num_output)));
}

LogitMatrix::LogitMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "logit matrix contains NaN or Inf");
  }
}

LogitMatrix LogitMatrix::zeros(std::size_t num_input, std::size_t num_output) {
  return LogitMatrix(Matrix::Zero(static_cast<Eigen::Index>(num_input),
                                  static_cast<Eigen::Index>(num_output)));
}

OutputSet::OutputSet(std::vector<Vector> net_inputs, std::vector<Vector> outputs)
    : net_inputs_(std::move(net_inputs)), outputs_(std::move(outputs)) {
  if (net_inputs_.size() != outputs_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "net input and output counts differ");
  }
  for (std::size_t j = 0; j < outputs_.size(); ++j) {
    const Vector& s = net_inputs_[j];
    const Vector& v = outputs_[j];
    if (s.size() != v.size()) {
      throw Error(ErrorKind::kDimensionMismatch, capsule_msg(j, "s_j and v_j sizes differ"), j);
    }
    if (!s.allFinite() || !v.allFinite()) {
      throw Error(ErrorKind::kNonFinite, capsule_msg(j, "non-finite output"), j);
    }
    // ||v|| = ||s||^2 / (1 + ||s||^2) rounds to 1 only for ||s|| > ~1e8.
    if (v.norm() > 1.0) {
      throw Error(ErrorKind::kDomain, capsule_msg(j, "output norm exceeds 1"), j);
    }
    // v parallel to s: s.v = ||s|| ||v||, or both zero.
    const double ns = s.norm();
    const double nv = v.norm();
    if ((ns == 0.0) != (nv == 0.0) ||
        std::abs(s.dot(v) - ns * nv) > 1e-9 * std::max(1.0, ns * nv)) {
      throw Error(ErrorKind::kDomain, capsule_msg(j, "v_j is not parallel to s_j"), j);
    }
  }
}

void RoutingConfig::validate() const {
  if (stop_tolerance && !(*stop_tolerance >= 0.0 && std::isfinite(*stop_tolerance))) {
    throw Error(ErrorKind::kInvalidArgument, "stop_tolerance must be finite and >= 0");
  }
}

void RoutingTrajectory::append(RoutingRecord record) {
  if (record.iteration != records_.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "record iteration " + std::to_string(record.iteration) +
                    " does not follow " + std::to_string(records_.size()));
  }
  if (record.iteration == 0 && record.lyapunov_gap) {
    throw Error(ErrorKind::kInvalidArgument, "iteration 0 has no lyapunov gap");
  }
  double sum = 0.0;
  for (double e : record.per_capsule_energy) sum += e;
  if (std::abs(record.total_energy + sum) > 1e-12 * std::max(1.0, std::abs(sum))) {
    throw Error(ErrorKind::kInvalidArgument, "total energy is not -sum of capsule energies");
  }
  records_.push_back(std::move(record));
}

void RoutingTrajectory::strip_last() {
  if (records_.empty()) return;
  records_.back().logits.reset();
  records_.back().outputs.reset();
}

}  // namespace capsroute
