#include "capsroute/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "capsroute/random.hpp"
#include "capsroute/scalar_math.hpp"

namespace capsroute {

GapReport GapReport::lower(double value, double tolerance, std::string context) {
  return {value, tolerance, value >= -tolerance, Bound::kLower, std::move(context)};
}

GapReport GapReport::upper(double value, double tolerance, std::string context) {
  return {value, tolerance, value <= tolerance, Bound::kUpper, std::move(context)};
}

GapReport GapReport::two_sided(double value, double tolerance, std::string context) {
  return {value, tolerance, std::abs(value) <= tolerance, Bound::kTwoSided,
          std::move(context)};
}

namespace {

void require_shape(const PredictionSet& preds, const Matrix& coupling) {
  if (static_cast<std::size_t>(coupling.rows()) != preds.num_input() ||
      static_cast<std::size_t>(coupling.cols()) != preds.num_output()) {
    std::ostringstream os;
    os << "coupling is " << coupling.rows() << "x" << coupling.cols() << ", predictions need "
       << preds.num_input() << "x" << preds.num_output();
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

void require_finite(const Matrix& m, const char* fn) {
  if (!m.allFinite()) throw Error(ErrorKind::kNonFinite, std::string(fn) + ": non-finite entry");
}

}  // namespace

double big_psi(const PredictionSet& preds, const Matrix& coupling) {
  require_shape(preds, coupling);
  double total = 0.0;
  for (std::size_t j = 0; j < preds.num_output(); ++j) {
    const Vector s = preds.prediction(j) * coupling.col(static_cast<Eigen::Index>(j));
    total += psi(s.norm());
  }
  return -total;
}

double big_psi(const PredictionSet& preds, const CouplingMatrix& coupling) {
  return big_psi(preds, coupling.values());
}

Matrix grad_big_psi(const PredictionSet& preds, const Matrix& coupling) {
  require_shape(preds, coupling);
  Matrix grad(coupling.rows(), coupling.cols());
  for (std::size_t j = 0; j < preds.num_output(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Matrix& u = preds.prediction(j);
    const Vector v = squash(u * coupling.col(col));
    grad.col(col) = -(u.transpose() * v);
  }
  return grad;
}

Matrix grad_big_psi(const PredictionSet& preds, const CouplingMatrix& coupling) {
  return grad_big_psi(preds, coupling.values());
}

double big_phi(const Matrix& logits) {
  require_finite(logits, "big_phi");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    total += log_sum_exp(logits.row(i).transpose());
  }
  return total;
}

double big_phi(const LogitMatrix& logits) { return big_phi(logits.values()); }

CouplingMatrix grad_big_phi(const Matrix& logits) {
  require_finite(logits, "grad_big_phi");
  Matrix c(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    c.row(i) = softmax(logits.row(i).transpose()).transpose();
  }
  return CouplingMatrix(std::move(c));
}

CouplingMatrix grad_big_phi(const LogitMatrix& logits) { return grad_big_phi(logits.values()); }

double big_phi_star(const Matrix& coupling) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
    const double h = neg_entropy(coupling.row(i).transpose());
    if (h == kInfiniteEnergy) {
      throw Error(ErrorKind::kOffSimplex, "row " + std::to_string(i) + " is off the simplex");
    }
    total += h;
  }
  return total;
}

double big_phi_star(const CouplingMatrix& coupling) { return big_phi_star(coupling.values()); }

GapReport fenchel_gap(const Vector& x, const Vector& y, bool equality_case) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "fenchel_gap: x and y lengths differ");
  }
  const double h = neg_entropy(y);
  if (h == kInfiniteEnergy) throw Error(ErrorKind::kOffSimplex, "fenchel_gap: y is off the simplex");
  const double value = log_sum_exp(x) + h - x.dot(y);
  if (equality_case) return GapReport::two_sided(value, kFenchelTolerance, "fenchel equality");
  return GapReport::lower(value, kFenchelTolerance, "fenchel");
}

GapReport lyapunov_gap(const PredictionSet& preds, const CouplingMatrix& prev,
                       const CouplingMatrix& next, double tolerance) {
  require_shape(preds, prev.values());
  require_shape(preds, next.values());
  const double step = (prev.values() - next.values()).squaredNorm();
  const double value = big_psi(preds, prev) - big_psi(preds, next) - step;
  return GapReport::lower(value, tolerance, "lyapunov");
}

Matrix fd_gradient(const MatrixFunction& f, const Matrix& at, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorKind::kInvalidArgument, "fd_gradient: step must be positive");
  }
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (Eigen::Index c = 0; c < at.cols(); ++c) {
    for (Eigen::Index r = 0; r < at.rows(); ++r) {
      const double x = at(r, c);
      probe(r, c) = x + step;
      const double up = f(probe);
      probe(r, c) = x - step;
      const double down = f(probe);
      probe(r, c) = x;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw Error(ErrorKind::kNonFinite, "fd_gradient: function value is not finite");
      }
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double relative_error(const Matrix& a, const Matrix& b) {
  const double diff = (a - b).norm();
  if (diff == 0.0) return 0.0;
  return diff / std::max(b.norm(), 1e-300);
}

GapReport chord_convexity_probe(const VectorFunction& f, std::size_t dim,
                                const ChordProbeOptions& options) {
  if (options.samples == 0) {
    throw Error(ErrorKind::kInvalidArgument, "chord_convexity_probe: samples must be >= 1");
  }
  if (dim == 0) throw Error(ErrorKind::kInvalidArgument, "chord_convexity_probe: dim must be >= 1");
  constexpr double kThetas[] = {0.25, 0.5, 0.75};
  Rng rng(options.seed);
  const auto d = static_cast<Eigen::Index>(dim);
  Vector x(d), y(d);
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t k = 0; k < options.samples; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.uniform(-options.box, options.box);
    for (Eigen::Index i = 0; i < d; ++i) y[i] = rng.uniform(-options.box, options.box);
    const double fx = f(x);
    const double fy = f(y);
    for (double t : kThetas) {
      const double fm = f((1.0 - t) * x + t * y);
      if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(fm)) {
        throw Error(ErrorKind::kNonFinite, "chord_convexity_probe: function value is not finite");
      }
      const double slack = (1.0 - t) * fx + t * fy - fm;
      if (slack < min_slack) {
        min_slack = slack;
        worst = k;
      }
    }
  }
  return GapReport::lower(min_slack, options.tolerance,
                          "chord sample " + std::to_string(worst));
}

VectorFunction negated_big_psi_function(const PredictionSet& preds) {
  const auto m = static_cast<Eigen::Index>(preds.num_input());
  const auto n = static_cast<Eigen::Index>(preds.num_output());
  return [preds, m, n](const Vector& flat) {
    if (flat.size() != m * n) {
      throw Error(ErrorKind::kDimensionMismatch, "flattened coupling has the wrong length");
    }
    return -big_psi(preds, Eigen::Map<const Matrix>(flat.data(), m, n));
  };
}

}  // namespace capsroute
