#pragma once

#include <limits>

#include "capsroute/types.hpp"

namespace capsroute {

/// psi(z) = z - arctan(z) for z >= 0. The agreement of a capsule whose net
/// input has norm z.
double psi(double z);

/// psi'(z) = z^2 / (1 + z^2), in [0, 1).
double psi_prime(double z);

/// psi''(z) = 2z / (1 + z^2)^2.
double psi_second(double z);

/// ln sum_j exp(x_j), max-shifted so entries up to +-1e3 do not overflow.
double log_sum_exp(const Vector& x);

/// exp(x_j) / sum_k exp(x_k); the gradient of log_sum_exp.
Vector softmax(const Vector& x);

/// Returned by neg_entropy for points off the probability simplex.
inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

/// sum_i y_i ln y_i on the simplex (0 ln 0 = 0), kInfiniteEnergy elsewhere.
/// Entries >= -1e-12 are clipped to zero; the sum may miss 1 by 1e-9.
double neg_entropy(const Vector& y);

/// True when y passes the membership test used by neg_entropy.
bool on_simplex(const Vector& y);

/// (||s||^2 / (1 + ||s||^2)) * s / ||s||, with squash(0) = 0.
Vector squash(const Vector& s);

}  // namespace capsroute
