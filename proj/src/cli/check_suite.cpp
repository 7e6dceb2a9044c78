#include "capsroute/cli/check_suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "capsroute/experiments.hpp"
#include "capsroute/random.hpp"
#include "capsroute/routing.hpp"
#include "capsroute/scalar_math.hpp"

namespace capsroute::cli {

namespace {

constexpr double kGradientTolerance = 1e-5;
constexpr double kConjugateTolerance = 1e-9;
constexpr double kSquashTolerance = 1e-12;
// Separates the size/probe stream from the instance stream of the same seed.
constexpr std::uint64_t kAuxStream = 0x9e3779b97f4a7c15ULL;

double simplex_violation(const RoutingTrajectory& traj) {
  double worst = 0.0;
  for (const RoutingRecord& rec : traj.records()) {
    const Matrix& c = rec.coupling.values();
    worst = std::max(worst, -std::min(c.minCoeff(), 0.0));
    worst = std::max(worst, (c.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return worst;
}

std::vector<CheckResult> run_seed(std::uint64_t seed, const CheckOptions& opt) {
  Rng aux(seed ^ kAuxStream);
  const std::size_t m = aux.uniform_int(opt.num_input.lo, opt.num_input.hi);
  const std::size_t n = aux.uniform_int(opt.num_output.lo, opt.num_output.hi);
  const std::size_t dim = aux.uniform_int(opt.dim.lo, opt.dim.hi);
  const PredictionSet preds = opt.zero_family
                                  ? PredictionSet::zeros(m, std::vector<std::size_t>(n, dim))
                                  : gen_random_instance(m, n, dim, 1.0, seed);
  const auto rows = static_cast<Eigen::Index>(m);
  const auto cols = static_cast<Eigen::Index>(n);

  std::vector<CheckResult> out;
  auto add = [&](const char* name, GapReport rep) {
    out.push_back({seed, m, n, dim, name, std::move(rep)});
  };

  RoutingConfig config;
  config.iterations = opt.iterations;
  const RoutingTrajectory matrix_traj = route_matrix(preds, config);
  const RoutingTrajectory scalar_traj = route_scalar(preds, config);

  double min_gap = std::numeric_limits<double>::infinity();
  for (const RoutingRecord& rec : matrix_traj.records()) {
    if (rec.lyapunov_gap) min_gap = std::min(min_gap, *rec.lyapunov_gap);
  }
  add("lyapunov", GapReport::lower(min_gap, opt.tolerance, "min over iterations"));

  add("equivalence", compare_trajectories(scalar_traj, matrix_traj));

  add("simplex", GapReport::upper(std::max(simplex_violation(matrix_traj),
                                           simplex_violation(scalar_traj)),
                                  kRowSumTolerance, "all iterates"));

  {
    Matrix c(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) c(i, j) = aux.uniform(0.05, 1.0);
      c.row(i) /= c.row(i).sum();
    }
    const Matrix fd = fd_gradient([&](const Matrix& x) { return big_psi(preds, x); }, c);
    add("grad_psi", GapReport::upper(relative_error(fd, grad_big_psi(preds, c)),
                                     kGradientTolerance, "random coupling"));
  }

  Matrix b(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) b(i, j) = aux.uniform(-5.0, 5.0);
  }
  {
    const Matrix fd = fd_gradient([](const Matrix& x) { return big_phi(x); }, b);
    add("grad_phi", GapReport::upper(relative_error(fd, grad_big_phi(b).values()),
                                     kGradientTolerance, "random logits"));
  }
  {
    const CouplingMatrix c = grad_big_phi(b);
    const double value = big_phi(b) + big_phi_star(c) - (b.transpose() * c.values()).trace();
    add("fenchel", GapReport::two_sided(value, kConjugateTolerance, "random logits"));

    Vector off = c.values().row(0).transpose();
    off[0] += 0.1;
    add("conjugate_domain", GapReport::upper(neg_entropy(off) == kInfiniteEnergy ? 0.0 : 1.0, 0.0,
                                             "row 0 shifted off simplex"));
  }

  ChordProbeOptions chord;
  chord.samples = opt.chord_samples;
  chord.seed = seed;
  add("concavity", chord_convexity_probe(negated_big_psi_function(preds), m * n, chord));

  {
    double worst = 0.0;
    for (std::size_t k = 0; k < opt.squash_samples; ++k) {
      Vector s(static_cast<Eigen::Index>(dim));
      const double scale = std::pow(10.0, aux.uniform(-3.0, 3.0));
      for (Eigen::Index d = 0; d < s.size(); ++d) s[d] = scale * aux.uniform(-1.0, 1.0);
      const double norm = s.norm();
      if (norm == 0.0) continue;
      const Vector expected = psi_prime(norm) * s / norm;
      worst = std::max(worst, (squash(s) - expected).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, squash(Vector::Zero(static_cast<Eigen::Index>(dim))).cwiseAbs().maxCoeff());
    add("squash_identity", GapReport::upper(worst, kSquashTolerance, "random vectors"));
  }
  return out;
}

void format_double(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "lyapunov", "equivalence", "simplex",   "grad_psi",       "grad_phi",
      "fenchel",  "conjugate_domain", "concavity", "squash_identity"};
  return names;
}

CheckSummary run_check_suite(const CheckOptions& opt) {
  if (opt.seeds == 0) throw Error(ErrorKind::kInvalidArgument, "seeds must be >= 1");
  if (!(opt.tolerance >= 0.0) || !std::isfinite(opt.tolerance)) {
    throw Error(ErrorKind::kInvalidArgument, "tolerance must be finite and >= 0");
  }
  for (const SizeRange* r : {&opt.num_input, &opt.num_output, &opt.dim}) {
    if (r->lo == 0 || r->lo > r->hi) throw Error(ErrorKind::kInvalidArgument, "bad size range");
  }
  if (opt.chord_samples == 0) throw Error(ErrorKind::kInvalidArgument, "chord samples must be >= 1");

  std::vector<std::vector<CheckResult>> per_seed(opt.seeds);
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(opt.seeds)));
  if (jobs == 1) {
    for (std::size_t k = 0; k < opt.seeds; ++k) per_seed[k] = run_seed(opt.base_seed + k, opt);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t k = next++; k < opt.seeds; k = next++) {
            per_seed[k] = run_seed(opt.base_seed + k, opt);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  CheckSummary summary;
  for (auto& results : per_seed) {
    for (auto& r : results) summary.results.push_back(std::move(r));
  }
  return summary;
}

bool CheckSummary::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.report.passed; });
}

std::vector<CheckAggregate> CheckSummary::aggregate() const {
  std::vector<CheckAggregate> out;
  for (const std::string& name : check_names()) {
    CheckAggregate agg{name, 0, 0, 0.0, 0};
    for (const CheckResult& r : results) {
      if (r.check != name) continue;
      const bool lower = r.report.bound == GapReport::Bound::kLower;
      const double v = r.report.bound == GapReport::Bound::kTwoSided ? std::abs(r.report.value)
                                                                     : r.report.value;
      if (agg.runs == 0 || (lower ? v < agg.worst : v > agg.worst)) {
        agg.worst = v;
        agg.worst_seed = r.seed;
      }
      ++agg.runs;
      if (!r.report.passed) ++agg.failures;
    }
    out.push_back(agg);
  }
  return out;
}

std::string CheckSummary::csv() const {
  std::string out = "seed,num_input,num_output,dim,check,value,tolerance,passed\n";
  for (const CheckResult& r : results) {
    out += std::to_string(r.seed) + "," + std::to_string(r.num_input) + "," +
           std::to_string(r.num_output) + "," + std::to_string(r.dim) + "," + r.check + ",";
    format_double(out, r.report.value);
    out += ",";
    format_double(out, r.report.tolerance);
    out += r.report.passed ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace capsroute::cli
