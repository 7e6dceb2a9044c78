#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "capsroute/energy.hpp"
#include "capsroute/experiments.hpp"
#include "capsroute/instance_io.hpp"
#include "capsroute/random.hpp"
#include "capsroute/routing.hpp"
#include "capsroute/scalar_math.hpp"
#include "test_util.hpp"

namespace capsroute {
namespace {

using testing::fixture;
using testing::json_matrix;
using testing::read_json;

PredictionSet single_unit_prediction() {
  Matrix u(2, 1);
  u << 1.0, 0.0;
  return PredictionSet::from_matrices({u});
}

Matrix random_stochastic(Rng& rng, Eigen::Index m, Eigen::Index n) {
  Matrix c(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = rng.uniform(0.05, 1.0);
    c.row(i) /= c.row(i).sum();
  }
  return c;
}

Matrix random_box(Rng& rng, Eigen::Index m, Eigen::Index n, double box) {
  Matrix b(m, n);
  for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = rng.uniform(-box, box);
  return b;
}

TEST(BigPsi, ZeroPredictionsGiveZero) {
  const PredictionSet p = PredictionSet::zeros(3, {2, 4});
  Rng rng(1);
  EXPECT_EQ(big_psi(p, CouplingMatrix(random_stochastic(rng, 3, 2))), 0.0);
}

TEST(BigPsi, SingleUnitPredictionIsMinusPsiOfOne) {
  EXPECT_NEAR(big_psi(single_unit_prediction(), uniform_coupling(1, 1)),
              -(1.0 - std::numbers::pi / 4.0), 1e-15);
}

TEST(BigPsi, MatchesHighPrecisionReferenceOnSeed42) {
  const auto ref = read_json("reference_values.json");
  const PredictionSet p = load_instance(fixture("random_m4_n3_d2_seed42.json"));
  EXPECT_NEAR(big_psi(p, uniform_coupling(4, 3)), ref["big_psi_uniform"].get<double>(), 1e-15);
  const CouplingMatrix c(json_matrix(ref["fixed_c"]));
  EXPECT_NEAR(big_psi(p, c), ref["big_psi_fixed_c"].get<double>(), 1e-15);
}

TEST(BigPsi, IsNeverPositiveAndChecksShape) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const PredictionSet p = gen_random_instance(5, 3, 2, 3.0, static_cast<std::uint64_t>(t));
    EXPECT_LE(big_psi(p, CouplingMatrix(random_stochastic(rng, 5, 3))), 0.0);
  }
  EXPECT_THROW(big_psi(single_unit_prediction(), Matrix::Ones(2, 1)), Error);
}

TEST(GradBigPsi, Examples) {
  const PredictionSet zero = PredictionSet::zeros(2, {3, 3});
  EXPECT_EQ(grad_big_psi(zero, uniform_coupling(2, 2)), Matrix::Zero(2, 2));
  const Matrix g = grad_big_psi(single_unit_prediction(), uniform_coupling(1, 1));
  ASSERT_EQ(g.size(), 1);
  EXPECT_NEAR(g(0, 0), -0.5, 1e-16);
}

TEST(GradBigPsi, MatchesFiniteDifferencesOn50Instances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 1000);
    const auto m = static_cast<std::size_t>(rng.uniform_int(2, 10));
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 10));
    const auto d = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const PredictionSet p = gen_random_instance(m, n, d, 1.0, seed);
    const Matrix c = random_stochastic(rng, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    const Matrix fd = fd_gradient([&](const Matrix& x) { return big_psi(p, x); }, c);
    EXPECT_LE(relative_error(fd, grad_big_psi(p, c)), 1e-5) << "seed " << seed;
  }
}

TEST(BigPhi, Examples) {
  EXPECT_NEAR(big_phi(Matrix::Zero(3, 4)), 3.0 * std::log(4.0), 1e-15);
  Matrix row(1, 3);
  row << 0.5, -1.0, 2.0;
  EXPECT_EQ(big_phi(row), log_sum_exp(row.row(0).transpose()));
  const auto ref = read_json("reference_values.json");
  EXPECT_NEAR(big_phi(json_matrix(ref["fixed_b"])), ref["big_phi_fixed_b"].get<double>(), 1e-13);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(big_phi(bad), Error);
}

TEST(GradBigPhi, Examples) {
  EXPECT_TRUE(grad_big_phi(Matrix::Zero(3, 5)).values().isApprox(uniform_coupling(3, 5).values()));
  Matrix b(1, 2);
  b << std::log(2.0), 0.0;
  const CouplingMatrix c = grad_big_phi(b);
  EXPECT_NEAR(c(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(c(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(GradBigPhi, MatchesFiniteDifferencesOn50Points) {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const auto m = static_cast<Eigen::Index>(rng.uniform_int(1, 12));
    const auto n = static_cast<Eigen::Index>(rng.uniform_int(1, 12));
    const Matrix b = random_box(rng, m, n, 5.0);
    const Matrix fd = fd_gradient([](const Matrix& x) { return big_phi(x); }, b);
    EXPECT_LE(relative_error(fd, grad_big_phi(b).values()), 1e-5);
  }
}

TEST(BigPhiStar, Examples) {
  EXPECT_NEAR(big_phi_star(uniform_coupling(4, 3)), -4.0 * std::log(3.0), 1e-14);
  Matrix onehot = Matrix::Zero(3, 3);
  onehot(0, 2) = onehot(1, 0) = onehot(2, 2) = 1.0;
  EXPECT_EQ(big_phi_star(CouplingMatrix(onehot)), 0.0);
  const auto ref = read_json("reference_values.json");
  EXPECT_NEAR(big_phi_star(CouplingMatrix(json_matrix(ref["fixed_c"]))),
              ref["big_phi_star_fixed_c"].get<double>(), 1e-15);
  Matrix off(1, 2);
  off << 0.5, 0.7;
  EXPECT_THROW(big_phi_star(off), Error);
}

TEST(ConjugatePair, FenchelYoungEqualityHoldsRowWise) {
  Rng rng(19);
  for (int t = 0; t < 50; ++t) {
    const Matrix b = random_box(rng, static_cast<Eigen::Index>(rng.uniform_int(1, 10)),
                                static_cast<Eigen::Index>(rng.uniform_int(1, 10)), 5.0);
    const CouplingMatrix c = grad_big_phi(b);
    EXPECT_NEAR(big_phi(b) + big_phi_star(c) - (b.transpose() * c.values()).trace(), 0.0, 1e-9);
  }
}

TEST(BigPhiStar, MinusHalfSquaredNormIsConvexOnStochasticMatrices) {
  // Chords between row-stochastic matrices stay row-stochastic.
  Rng rng(23);
  const auto f = [](const Matrix& c) { return big_phi_star(c) - 0.5 * c.squaredNorm(); };
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    const auto m = static_cast<Eigen::Index>(rng.uniform_int(1, 8));
    const auto n = static_cast<Eigen::Index>(rng.uniform_int(2, 8));
    const Matrix x = random_stochastic(rng, m, n);
    const Matrix y = random_stochastic(rng, m, n);
    for (double th : {0.25, 0.5, 0.75}) {
      worst = std::min(worst, (1 - th) * f(x) + th * f(y) - f((1 - th) * x + th * y));
    }
  }
  EXPECT_GE(worst, -1e-12);
}

TEST(FenchelGap, Examples) {
  const GapReport eq = fenchel_gap(Vector::Zero(2), Vector::Constant(2, 0.5), true);
  EXPECT_NEAR(eq.value, 0.0, 1e-16);
  EXPECT_TRUE(eq.passed);
  Vector onehot(2);
  onehot << 1.0, 0.0;
  const GapReport r = fenchel_gap(Vector::Zero(2), onehot);
  EXPECT_NEAR(r.value, std::log(2.0), 1e-15);
  EXPECT_TRUE(r.passed);
  // The equality variant rejects a strictly positive gap.
  EXPECT_FALSE(fenchel_gap(Vector::Zero(2), onehot, true).passed);
  EXPECT_THROW(fenchel_gap(Vector::Zero(3), onehot), Error);
  Vector off(2);
  off << 0.9, 0.9;
  EXPECT_THROW(fenchel_gap(Vector::Zero(2), off), Error);
}

TEST(FenchelGap, EqualityAtSoftmaxAndNonnegativeElsewhere) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    Vector x(static_cast<Eigen::Index>(1 + t % 7));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-5, 5);
    EXPECT_LE(std::abs(fenchel_gap(x, softmax(x), true).value), 1e-10);
    Vector y(x.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.uniform(0.0, 1.0);
    y /= y.sum();
    EXPECT_TRUE(fenchel_gap(x, y).passed);
  }
}

TEST(LyapunovGap, DegenerateInstancesHaveZeroGap) {
  const PredictionSet zero = PredictionSet::zeros(3, {2, 2});
  const GapReport a = lyapunov_gap(zero, uniform_coupling(3, 2), uniform_coupling(3, 2));
  EXPECT_EQ(a.value, 0.0);
  EXPECT_TRUE(a.passed);
  const PredictionSet one = gen_random_instance(4, 1, 3, 1.0, 5);
  EXPECT_EQ(lyapunov_gap(one, uniform_coupling(4, 1), uniform_coupling(4, 1)).value, 0.0);
}

TEST(LyapunovGap, HoldsOnEveryConsecutivePairOf100Instances) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const PredictionSet p =
        gen_random_instance(rng.uniform_int(2, 16), rng.uniform_int(2, 16), rng.uniform_int(2, 8),
                            1.0, seed);
    RoutingState state = initial_state(p);
    for (int r = 0; r < 20; ++r) {
      RoutingState next = routing_step(p, state);
      const GapReport gap = lyapunov_gap(p, state.coupling, next.coupling);
      EXPECT_TRUE(gap.passed) << "seed " << seed << " r " << r << " gap " << gap.value;
      worst = std::min(worst, gap.value);
      state = std::move(next);
    }
  }
  EXPECT_GE(worst, -1e-9);
}

TEST(FdGradient, Examples) {
  Rng rng(6);
  const Matrix x = random_box(rng, 3, 4, 2.0);
  EXPECT_EQ(fd_gradient([](const Matrix&) { return 7.0; }, x), Matrix::Zero(3, 4));
  const Matrix g = fd_gradient([](const Matrix& m) { return 0.5 * m.squaredNorm(); }, x);
  EXPECT_LE((g - x).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(fd_gradient([](const Matrix&) { return std::nan(""); }, x), Error);
  EXPECT_THROW(fd_gradient([](const Matrix&) { return 0.0; }, x, 0.0), Error);
}

TEST(ChordProbe, NormAndPsiOfNormAreConvex) {
  ChordProbeOptions opt;
  opt.seed = 3;
  EXPECT_TRUE(chord_convexity_probe([](const Vector& x) { return x.norm(); }, 5, opt).passed);
  EXPECT_TRUE(
      chord_convexity_probe([](const Vector& x) { return psi(x.norm()); }, 8, opt).passed);
}

TEST(ChordProbe, ColumnTermOfPsiIsConcaveNotConvex) {
  const PredictionSet p = gen_random_instance(4, 1, 3, 1.0, 12);
  const Matrix u = p.prediction(0);
  ChordProbeOptions opt;
  opt.seed = 9;
  const GapReport concave =
      chord_convexity_probe([&](const Vector& c) { return -psi((u * c).norm()); }, 4, opt);
  EXPECT_FALSE(concave.passed);
  EXPECT_LT(concave.value, 0.0);
  const GapReport convex =
      chord_convexity_probe([&](const Vector& c) { return psi((u * c).norm()); }, 4, opt);
  EXPECT_TRUE(convex.passed);
}

TEST(ChordProbe, NegatedBigPsiIsConvexOnTenInstances) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PredictionSet p = gen_random_instance(6, 4, 3, 1.0, seed);
    ChordProbeOptions opt;
    opt.seed = seed;
    const GapReport r = chord_convexity_probe(negated_big_psi_function(p), 24, opt);
    EXPECT_TRUE(r.passed) << r.value;
  }
}

TEST(ChordProbe, RejectsZeroSamples) {
  ChordProbeOptions opt;
  opt.samples = 0;
  EXPECT_THROW(chord_convexity_probe([](const Vector&) { return 0.0; }, 2, opt), Error);
}

TEST(GapReport, BoundsDecidePassing) {
  EXPECT_TRUE(GapReport::lower(-1e-10, 1e-9, "").passed);
  EXPECT_FALSE(GapReport::lower(-2e-9, 1e-9, "").passed);
  EXPECT_TRUE(GapReport::upper(1e-13, 1e-12, "").passed);
  EXPECT_FALSE(GapReport::upper(2e-12, 1e-12, "").passed);
  EXPECT_FALSE(GapReport::two_sided(-2e-10, 1e-10, "").passed);
}

}  // namespace
}  // namespace capsroute
