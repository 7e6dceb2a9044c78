#include "capsroute/scalar_math.hpp"

#include <cmath>
#include <sstream>

namespace capsroute {

namespace {

constexpr double kSimplexEntryTolerance = 1e-12;
constexpr double kSimplexSumTolerance = 1e-9;

void require_nonneg_finite(double z, const char* fn) {
  if (!std::isfinite(z)) {
    throw Error(ErrorKind::kNonFinite, std::string(fn) + ": non-finite argument");
  }
  if (z < 0.0) {
    std::ostringstream os;
    os << fn << ": argument " << z << " is negative";
    throw Error(ErrorKind::kDomain, os.str());
  }
}

void require_finite(const Vector& x, const char* fn) {
  if (x.size() == 0) throw Error(ErrorKind::kEmpty, std::string(fn) + ": empty vector");
  if (!x.allFinite()) throw Error(ErrorKind::kNonFinite, std::string(fn) + ": non-finite entry");
}

}  // namespace

double psi(double z) {
  require_nonneg_finite(z, "psi");
  // z - atan(z) cancels catastrophically near 0; use the alternating series
  // z^3/3 - z^5/5 + ... there. At z = 0.1 the truncation is below 1e-24.
  if (z < 0.1) {
    const double z2 = z * z;
    double term = z * z2;
    double sum = 0.0;
    for (int k = 3; k <= 21; k += 2) {
      sum += ((k / 2) % 2 == 1 ? 1.0 : -1.0) * term / k;
      term *= z2;
    }
    return sum;
  }
  return z - std::atan(z);
}

double psi_prime(double z) {
  require_nonneg_finite(z, "psi_prime");
  const double z2 = z * z;
  return z2 / (1.0 + z2);
}

double psi_second(double z) {
  require_nonneg_finite(z, "psi_second");
  const double d = 1.0 + z * z;
  return 2.0 * z / (d * d);
}

double log_sum_exp(const Vector& x) {
  require_finite(x, "log_sum_exp");
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

Vector softmax(const Vector& x) {
  require_finite(x, "softmax");
  Vector e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

bool on_simplex(const Vector& y) {
  if (y.size() == 0) return false;
  if ((y.array() < -kSimplexEntryTolerance).any()) return false;
  return std::abs(y.array().max(0.0).sum() - 1.0) <= kSimplexSumTolerance;
}

double neg_entropy(const Vector& y) {
  if (!y.allFinite()) throw Error(ErrorKind::kNonFinite, "neg_entropy: non-finite entry");
  if (!on_simplex(y)) return kInfiniteEnergy;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = std::max(y[i], 0.0);
    if (p > 0.0) sum += p * std::log(p);
  }
  return sum;
}

Vector squash(const Vector& s) {
  if (!s.allFinite()) throw Error(ErrorKind::kNonFinite, "squash: non-finite entry");
  const double n = s.norm();
  if (n == 0.0) return Vector::Zero(s.size());
  // n^2/(1+n^2) / n written as 1/(n + 1/n) so large norms do not overflow.
  return s / (n + 1.0 / n);
}

}  // namespace capsroute
