#include "capsroute/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "capsroute/cli/svg.hpp"
#include "capsroute/instance_io.hpp"
#include "capsroute/routing.hpp"

namespace capsroute::cli {

using ojson = nlohmann::ordered_json;

namespace {

void append_double(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

ojson matrix_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson vector_json(const Vector& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// JSON has no infinities; non-finite values become null.
ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

std::vector<double> row_entropy(const RoutingTrajectory& traj) {
  return polarization_metrics(traj).row_entropy_mean;
}

/// Index of the first record whose Lyapunov gap is below -tolerance.
std::optional<std::size_t> first_lyapunov_violation(const RoutingTrajectory& traj,
                                                    double tolerance) {
  for (const RoutingRecord& rec : traj.records()) {
    if (rec.lyapunov_gap && *rec.lyapunov_gap < -tolerance) return rec.iteration;
  }
  return std::nullopt;
}

}  // namespace

PredictionSet generate(const GenOptions& opts, std::string* kind_out) {
  if (!opts.num_input) throw Error(ErrorKind::kInvalidArgument, "--m is required");
  if (kind_out) *kind_out = opts.kind;
  if (opts.kind == "random") {
    return gen_random_instance(*opts.num_input, opts.num_output, opts.dim, opts.scale, opts.seed);
  }
  if (opts.kind == "ring") return gen_ring_instance(*opts.num_input, opts.radii, opts.noise, opts.seed);
  throw Error(ErrorKind::kInvalidArgument, "unknown generator kind '" + opts.kind + "'");
}

std::string trajectory_csv(const RoutingTrajectory& traj) {
  const std::vector<double> entropy = row_entropy(traj);
  std::string out =
      "iteration,capsule,psi_sj,norm_vj,row_entropy_mean,total_agreement,lyapunov_gap\n";
  for (std::size_t r = 0; r < traj.size(); ++r) {
    const RoutingRecord& rec = traj[r];
    for (std::size_t j = 0; j < rec.per_capsule_energy.size(); ++j) {
      const double s = rec.net_input_norms[j];
      out += std::to_string(rec.iteration) + "," + std::to_string(j) + ",";
      append_double(out, rec.per_capsule_energy[j]);
      out += ",";
      // ||v|| = ||s||^2 / (1 + ||s||^2), also available without stored outputs.
      append_double(out, s * s / (1.0 + s * s));
      out += ",";
      append_double(out, entropy[r]);
      out += ",";
      append_double(out, -rec.total_energy);
      out += ",";
      if (rec.lyapunov_gap) append_double(out, *rec.lyapunov_gap);
      out += "\n";
    }
  }
  return out;
}

std::string couplings_json(const RoutingTrajectory& traj) {
  ojson iters = ojson::array();
  for (const RoutingRecord& rec : traj.records()) {
    ojson item;
    item["iteration"] = rec.iteration;
    if (rec.logits) item["B"] = matrix_json(rec.logits->values());
    item["C"] = matrix_json(rec.coupling.values());
    iters.push_back(std::move(item));
  }
  ojson doc;
  doc["iterations"] = std::move(iters);
  return doc.dump() + "\n";
}

std::string report_json(const ExperimentReport& rep) {
  ojson doc;
  ojson prov;
  prov["generator"] = rep.provenance.generator;
  prov["seed"] = rep.provenance.seed;
  prov["num_input"] = rep.provenance.num_input;
  prov["dims"] = rep.provenance.dims;
  ojson params = ojson::object();
  for (const auto& [k, v] : rep.provenance.params) params[k] = v;
  prov["params"] = std::move(params);
  doc["experiment"] = rep.name;
  doc["provenance"] = std::move(prov);

  ojson config;
  config["iterations"] = rep.config.iterations;
  config["stop_tolerance"] =
      rep.config.stop_tolerance ? ojson(*rep.config.stop_tolerance) : ojson(nullptr);
  config["record_full_state"] = rep.config.record_full_state;
  doc["config"] = std::move(config);

  ojson series = ojson::object();
  for (const NamedSeries& s : rep.series) series[s.name] = s.values;
  doc["series"] = std::move(series);

  ojson flags;
  flags["collapsed_capsules"] = rep.collapsed_capsules;
  flags["collapse_threshold"] = kCollapseThreshold;
  flags["agreement_nondecreasing"] = rep.agreement_nondecreasing;
  if (rep.name == "distribution") {
    flags["suppressed_capsules"] = rep.suppressed_capsules;
    flags["unit_capsules"] = rep.unit_capsules;
  }
  doc["flags"] = std::move(flags);

  ojson gaps;
  gaps["min_lyapunov_gap"] = number_or_null(rep.min_lyapunov_gap);
  gaps["lyapunov_tolerance"] = kLyapunovTolerance;
  ojson per_iter = ojson::array();
  for (const RoutingRecord& rec : rep.trajectory.records()) {
    per_iter.push_back(rec.lyapunov_gap ? ojson(*rec.lyapunov_gap) : ojson(nullptr));
  }
  gaps["lyapunov"] = std::move(per_iter);
  doc["gaps"] = std::move(gaps);

  ojson outputs = ojson::array();
  for (const Vector& v : rep.final_outputs.outputs()) outputs.push_back(vector_json(v));
  doc["final_outputs"] = std::move(outputs);

  if (!rep.scatter.empty()) {
    ojson scatter = ojson::array();
    for (const ScatterPoint& p : rep.scatter) {
      scatter.push_back({{"capsule", p.capsule}, {"x", p.x}, {"y", p.y}});
    }
    doc["scatter"] = std::move(scatter);
  }
  return doc.dump(2) + "\n";
}

std::string series_csv(const ExperimentReport& rep) {
  std::string out = "iteration";
  for (const NamedSeries& s : rep.series) out += "," + s.name;
  out += "\n";
  for (std::size_t r = 0; r < rep.trajectory.size(); ++r) {
    out += std::to_string(r);
    for (const NamedSeries& s : rep.series) {
      out += ",";
      append_double(out, s.values[r]);
    }
    out += "\n";
  }
  return out;
}

ExitStatus cmd_gen(const GenCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    const PredictionSet preds = generate(cmd.gen);
    const std::string text = instance_to_json(preds);
    write_text(cmd.out, text);
    out << cmd.out.string() << " " << content_digest(text) << "\n";
    return ExitStatus::kSuccess;
  } catch (const Error& e) {
    err << "gen: " << e.what() << "\n";
    return ExitStatus::kUsageError;
  }
}

ExitStatus cmd_route(const RouteCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.form != "scalar" && cmd.form != "matrix" && cmd.form != "both") {
    err << "route: --form must be scalar, matrix or both\n";
    return ExitStatus::kUsageError;
  }
  try {
    const PredictionSet preds = load_instance(cmd.input);
    RoutingConfig config;
    config.iterations = cmd.iterations;
    config.stop_tolerance = cmd.stop_tolerance;

    std::optional<RoutingTrajectory> scalar, matrix;
    if (cmd.form != "matrix") scalar = route_scalar(preds, config);
    if (cmd.form != "scalar") matrix = route_matrix(preds, config);
    const RoutingTrajectory& primary = matrix ? *matrix : *scalar;

    write_text(cmd.out_csv, trajectory_csv(primary));
    if (cmd.out_couplings) write_text(*cmd.out_couplings, couplings_json(primary));
    if (cmd.out_svg) {
      std::vector<NamedSeries> lines(1 + preds.num_output());
      lines[0].name = "total_agreement";
      for (std::size_t j = 0; j < preds.num_output(); ++j) {
        lines[j + 1].name = "agreement_" + std::to_string(j);
      }
      for (const RoutingRecord& rec : primary.records()) {
        lines[0].values.push_back(-rec.total_energy);
        for (std::size_t j = 0; j < preds.num_output(); ++j) {
          lines[j + 1].values.push_back(rec.per_capsule_energy[j]);
        }
      }
      write_text(*cmd.out_svg, svg_line_plot("agreement per iteration", lines));
    }

    ExitStatus status = ExitStatus::kSuccess;
    for (const auto* traj : {scalar ? &*scalar : nullptr, matrix ? &*matrix : nullptr}) {
      if (!traj) continue;
      if (auto r = first_lyapunov_violation(*traj, kLyapunovTolerance)) {
        err << "route: lyapunov gap " << *(*traj)[*r].lyapunov_gap << " at iteration " << *r
            << " is below -" << kLyapunovTolerance << "\n";
        status = ExitStatus::kInvariantViolation;
      }
    }
    if (scalar && matrix) {
      const GapReport cmp = compare_trajectories(*scalar, *matrix);
      out << "equivalence max_abs_diff=" << cmp.value << " (" << cmp.context << ") "
          << (cmp.passed ? "ok" : "FAILED") << "\n";
      if (!cmp.passed) status = ExitStatus::kInvariantViolation;
    }
    out << "wrote " << cmd.out_csv.string() << " (" << primary.size() << " records)\n";
    return status;
  } catch (const Error& e) {
    err << "route: " << e.what() << "\n";
    return ExitStatus::kUsageError;
  }
}

ExitStatus cmd_experiment(const ExperimentCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.name != "numerical" && cmd.name != "distribution") {
    err << "experiment: name must be numerical or distribution\n";
    return ExitStatus::kUsageError;
  }
  try {
    Provenance prov;
    PredictionSet preds = [&] {
      if (cmd.input) {
        PredictionSet p = load_instance(*cmd.input);
        prov = describe(p, "file");
        prov.params["path"] = cmd.input->string();
        return p;
      }
      std::string kind;
      PredictionSet p = generate(cmd.gen, &kind);
      prov = describe(p, kind, cmd.gen.seed);
      if (kind == "random") {
        prov.params["scale"] = std::to_string(cmd.gen.scale);
      } else {
        prov.params["noise"] = std::to_string(cmd.gen.noise);
      }
      return p;
    }();

    const ExperimentReport rep = cmd.name == "numerical"
                                     ? run_numerical_experiment(preds, cmd.iterations, prov)
                                     : run_distribution_experiment(preds, cmd.iterations, prov);

    std::filesystem::create_directories(cmd.out_dir);
    write_text(cmd.out_dir / "report.json", report_json(rep));
    write_text(cmd.out_dir / "series.csv", series_csv(rep));
    if (rep.name == "numerical") {
      std::vector<NamedSeries> lines;
      for (const NamedSeries& s : rep.series) {
        if (s.name == "total_agreement" || s.name.rfind("agreement_", 0) == 0) lines.push_back(s);
      }
      write_text(cmd.out_dir / "plot.svg", svg_line_plot("agreement per iteration", lines));
    } else {
      std::vector<ScatterPoint> finals;
      for (std::size_t j = 0; j < rep.final_outputs.size(); ++j) {
        const Vector& v = rep.final_outputs.outputs()[j];
        finals.push_back({j, v[0], v[1]});
      }
      write_text(cmd.out_dir / "plot.svg",
                 svg_scatter_plot("predictions and final outputs", rep.scatter, finals));
    }

    out << rep.name << ": " << rep.trajectory.size() << " records, collapsed capsules:";
    for (std::size_t j : rep.collapsed_capsules) out << " " << j;
    out << "\n";
    if (rep.name == "distribution") {
      for (std::size_t j = 0; j < rep.final_outputs.size(); ++j) {
        out << "  |v_" << j << "| = " << rep.final_outputs.outputs()[j].norm() << "\n";
      }
    }
    if (rep.min_lyapunov_gap < -kLyapunovTolerance) {
      err << "experiment: lyapunov gap " << rep.min_lyapunov_gap << " below tolerance\n";
      return ExitStatus::kInvariantViolation;
    }
    return ExitStatus::kSuccess;
  } catch (const Error& e) {
    err << "experiment: " << e.what() << "\n";
    return ExitStatus::kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "experiment: " << e.what() << "\n";
    return ExitStatus::kUsageError;
  }
}

ExitStatus cmd_check(const CheckCommand& cmd, std::ostream& out, std::ostream& err) {
  CheckSummary summary;
  try {
    summary = run_check_suite(cmd.options);
    if (cmd.out_csv) write_text(*cmd.out_csv, summary.csv());
  } catch (const Error& e) {
    err << "check: " << e.what() << "\n";
    return ExitStatus::kUsageError;
  }
  for (const CheckAggregate& agg : summary.aggregate()) {
    char line[160];
    std::snprintf(line, sizeof line, "%-17s runs=%zu failures=%zu worst=%.6g (seed %llu)\n",
                  agg.check.c_str(), agg.runs, agg.failures, agg.worst,
                  static_cast<unsigned long long>(agg.worst_seed));
    out << line;
  }
  bool ok = true;
  for (const CheckResult& r : summary.results) {
    if (r.report.passed) continue;
    ok = false;
    err << "FAILED seed=" << r.seed << " check=" << r.check << " value=" << r.report.value
        << " tolerance=" << r.report.tolerance << " (" << r.report.context << ")\n";
  }
  out << (ok ? "all checks passed\n" : "check failures found\n");
  return ok ? ExitStatus::kSuccess : ExitStatus::kInvariantViolation;
}

}  // namespace capsroute::cli
