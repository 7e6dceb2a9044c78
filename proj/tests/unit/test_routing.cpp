#include <cmath>

#include <gtest/gtest.h>

#include "capsroute/experiments.hpp"
#include "capsroute/instance_io.hpp"
#include "capsroute/random.hpp"
#include "capsroute/routing.hpp"
#include "test_util.hpp"

namespace capsroute {
namespace {

using testing::fixture;
using testing::json_matrix;
using testing::json_vector;
using testing::read_json;

RoutingConfig iterations(std::size_t k) {
  RoutingConfig c;
  c.iterations = k;
  return c;
}

PredictionSet single_unit_prediction() {
  Matrix u(2, 1);
  u << 1.0, 0.0;
  return PredictionSet::from_matrices({u});
}

TEST(Routing, ZeroPredictionsKeepUniformCouplings) {
  const PredictionSet p = PredictionSet::zeros(5, {2, 3, 2});
  for (const auto& traj : {route_scalar(p, iterations(4)), route_matrix(p, iterations(4))}) {
    ASSERT_EQ(traj.size(), 5u);
    for (const RoutingRecord& r : traj.records()) {
      EXPECT_TRUE(r.coupling.values().isApprox(uniform_coupling(5, 3).values()));
      EXPECT_EQ(r.logits->values(), Matrix::Zero(5, 3));
      EXPECT_EQ(r.total_energy, 0.0);
      for (const Vector& v : r.outputs->outputs()) EXPECT_EQ(v.norm(), 0.0);
    }
  }
}

TEST(Routing, SingleOutputCapsuleHasUnitCouplings) {
  const PredictionSet p = gen_random_instance(6, 1, 3, 1.0, 3);
  const RoutingTrajectory t = route_matrix(p, iterations(5));
  for (const RoutingRecord& r : t.records()) EXPECT_EQ(r.coupling.values(), Matrix::Ones(6, 1));
  // Outputs never change when the coupling cannot.
  EXPECT_EQ(t.back().outputs->outputs()[0], t[0].outputs->outputs()[0]);
}

TEST(Routing, ZeroIterationsRecordsTheInitialState) {
  const PredictionSet p = gen_random_instance(4, 3, 2, 1.0, 42);
  const RoutingTrajectory t = route_scalar(p, iterations(0));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].iteration, 0u);
  EXPECT_FALSE(t[0].lyapunov_gap.has_value());
  EXPECT_NEAR(t[0].total_energy, big_psi(p, uniform_coupling(4, 3)), 1e-15);
}

TEST(Routing, ScalarFormMatchesHighPrecisionReference) {
  const PredictionSet p = load_instance(fixture("random_m4_n3_d2_seed42.json"));
  const auto ref = read_json("reference_trajectory_seed42.json")["iterations"];
  const RoutingTrajectory t = route_scalar(p, iterations(20));
  ASSERT_EQ(t.size(), ref.size());
  double worst = 0.0;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    const RoutingRecord& rec = t[r];
    worst = std::max(worst, (rec.logits->values() - json_matrix(ref[r]["B"])).cwiseAbs().maxCoeff());
    worst = std::max(worst, (rec.coupling.values() - json_matrix(ref[r]["C"])).cwiseAbs().maxCoeff());
    for (std::size_t j = 0; j < 3; ++j) {
      const Vector v = json_vector(ref[r]["v"][j]);
      worst = std::max(worst, (rec.outputs->outputs()[j] - v).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Routing, ScalarAndMatrixFormsAgreeOn100Instances) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 500);
    const PredictionSet p = gen_random_instance(rng.uniform_int(1, 16), rng.uniform_int(1, 16),
                                                rng.uniform_int(1, 8), 1.0, seed);
    const GapReport r =
        compare_trajectories(route_scalar(p, iterations(20)), route_matrix(p, iterations(20)));
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.value << " " << r.context;
  }
}

TEST(RoutingStep, SingleCoefficientExample) {
  const PredictionSet p = single_unit_prediction();
  const RoutingState s1 = routing_step(p, initial_state(p));
  EXPECT_EQ(s1.iteration, 1u);
  EXPECT_NEAR(s1.logits(0, 0), 0.5, 1e-16);
  EXPECT_EQ(s1.coupling(0, 0), 1.0);
}

TEST(RoutingStep, LogitsGrowByAgreement) {
  const PredictionSet p = gen_random_instance(3, 2, 2, 1.0, 1);
  const RoutingState s0 = initial_state(p);
  const RoutingState s1 = routing_step(p, s0);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double agree = p.prediction(j).col(i).dot(s0.outputs.outputs()[j]);
      EXPECT_NEAR(s1.logits(i, static_cast<Eigen::Index>(j)), agree, 1e-15);
    }
  }
}

TEST(NonlinearGdStep, IdentityMirrorIsPlainGradientDescent) {
  const MatrixMap identity = [](const Matrix& x) { return x; };
  Matrix x0(2, 2);
  x0 << 1.0, -2.0, 0.5, 4.0;
  const auto [u, x] = nonlinear_gd_step(identity, identity, x0, 0.1);
  EXPECT_TRUE(u.isApprox(0.9 * x0, 1e-15));
  EXPECT_EQ(x, u);
  const auto [u0, same] = nonlinear_gd_step(identity, identity, x0, 0.0);
  EXPECT_EQ(u0, x0);
  EXPECT_EQ(same, x0);
  EXPECT_THROW(nonlinear_gd_step(identity, identity, x0, -1.0), Error);
}

TEST(NonlinearGdStep, WithSoftmaxMirrorItIsOneRoutingStep) {
  const PredictionSet p = gen_random_instance(4, 3, 2, 1.0, 42);
  const MatrixMap mirror = [](const Matrix& b) { return grad_big_phi(b).values(); };
  const MatrixMap energy = [&](const Matrix& c) { return grad_big_psi(p, c); };
  RoutingState state = initial_state(p);
  Matrix u = Matrix::Zero(4, 3);
  for (int r = 0; r < 10; ++r) {
    auto [u_next, x_next] = nonlinear_gd_step(mirror, energy, u, 1.0);
    state = routing_step(p, state);
    EXPECT_LE((u_next - state.logits.values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((x_next - state.coupling.values()).cwiseAbs().maxCoeff(), 1e-12);
    u = std::move(u_next);
  }
}

TEST(CompareTrajectories, DetectsLengthAndValueDifferences) {
  const PredictionSet p = gen_random_instance(4, 3, 2, 1.0, 2);
  const RoutingTrajectory a = route_matrix(p, iterations(3));
  EXPECT_EQ(compare_trajectories(a, a).value, 0.0);
  const GapReport len = compare_trajectories(a, route_matrix(p, iterations(4)));
  EXPECT_FALSE(len.passed);
  EXPECT_TRUE(std::isinf(len.value));
  const PredictionSet q = gen_random_instance(4, 3, 2, 1.0, 3);
  EXPECT_FALSE(compare_trajectories(a, route_matrix(q, iterations(3))).passed);
}

TEST(Routing, AgreementIsMonotoneAndGapsAreRecorded) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const PredictionSet p = gen_random_instance(8, 5, 4, 1.0, seed);
    const RoutingTrajectory t = route_matrix(p, iterations(20));
    for (std::size_t r = 1; r < t.size(); ++r) {
      ASSERT_TRUE(t[r].lyapunov_gap.has_value());
      EXPECT_GE(*t[r].lyapunov_gap, -kLyapunovTolerance);
      EXPECT_LE(t[r].total_energy, t[r - 1].total_energy + 1e-15);
    }
  }
}

TEST(Routing, EarlyStopHaltsAtFirstSmallStep) {
  const PredictionSet p = load_instance(fixture("random_m4_n3_d2_seed42.json"));
  RoutingConfig config = iterations(1000);
  config.stop_tolerance = 1e-6;
  const RoutingTrajectory t = route_matrix(p, config);
  ASSERT_GT(t.size(), 2u);
  ASSERT_LT(t.size(), 1001u);
  const auto delta = [&](std::size_t r) {
    return (t[r].coupling.values() - t[r - 1].coupling.values()).norm();
  };
  EXPECT_LT(delta(t.size() - 1), 1e-6);
  for (std::size_t r = 1; r + 1 < t.size(); ++r) EXPECT_GE(delta(r), 1e-6);
  EXPECT_EQ(compare_trajectories(t, route_scalar(p, config)).passed, true);
}

TEST(Routing, PartialRecordsKeepOnlyFinalState) {
  const PredictionSet p = gen_random_instance(4, 3, 2, 1.0, 42);
  RoutingConfig config = iterations(5);
  config.record_full_state = false;
  const RoutingTrajectory t = route_matrix(p, config);
  ASSERT_EQ(t.size(), 6u);
  for (std::size_t r = 0; r + 1 < t.size(); ++r) {
    EXPECT_FALSE(t[r].logits.has_value());
    EXPECT_FALSE(t[r].outputs.has_value());
    EXPECT_EQ(t[r].net_input_norms.size(), 3u);
  }
  EXPECT_TRUE(t.back().logits.has_value());
  EXPECT_TRUE(t.back().outputs.has_value());
  const RoutingTrajectory full = route_matrix(p, iterations(5));
  EXPECT_EQ(t.back().coupling.values(), full.back().coupling.values());
}

}  // namespace
}  // namespace capsroute
