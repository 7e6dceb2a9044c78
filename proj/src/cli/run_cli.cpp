#include <charconv>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "capsroute/cli/commands.hpp"

namespace capsroute::cli {

namespace {

constexpr const char* kSeedEnv = "CAPSROUTE_SEED";

// "lo:hi" or a single "n".
std::string parse_range(const std::string& text, SizeRange& out) {
  const auto colon = text.find(':');
  const std::string lo = text.substr(0, colon);
  const std::string hi = colon == std::string::npos ? lo : text.substr(colon + 1);
  auto read = [](const std::string& s, std::size_t& v) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  SizeRange r;
  if (!read(lo, r.lo) || !read(hi, r.hi) || r.lo == 0 || r.lo > r.hi) {
    return "expected lo:hi with 1 <= lo <= hi, got '" + text + "'";
  }
  out = r;
  return {};
}

void add_gen_options(CLI::App& app, GenOptions& gen, bool require_m) {
  app.add_option("--kind", gen.kind, "Generator: random or ring")
      ->check(CLI::IsMember({"random", "ring"}))
      ->capture_default_str();
  auto* m = app.add_option("--m", gen.num_input, "Number of input capsules M");
  if (require_m) m->required();
  app.add_option("--n", gen.num_output, "Number of output capsules N (random)")
      ->capture_default_str();
  app.add_option("--dim", gen.dim, "Output capsule dimension (random)")->capture_default_str();
  app.add_option("--scale", gen.scale, "Entries uniform on [-scale, scale] (random)")
      ->capture_default_str();
  app.add_option("--radii", gen.radii, "Cluster radii, comma separated (ring)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--noise", gen.noise, "Cluster noise standard deviation (ring)")
      ->capture_default_str();
  app.add_option("--seed", gen.seed, "Generator seed")->envname(kSeedEnv)->capture_default_str();
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capsule dynamic routing: energies, descent diagnostics and experiments", "capsroute"};
  app.require_subcommand(1);

  GenCommand gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate an instance JSON file");
  add_gen_options(*gen_cmd, gen.gen, true);
  gen_cmd->add_option("-o,--out", gen.out, "Output path")->required();

  RouteCommand route;
  std::optional<double> route_stop;
  auto* route_cmd = app.add_subcommand("route", "Run routing on an instance and write a CSV");
  route_cmd->add_option("-i,--input", route.input, "Instance JSON")->required();
  route_cmd->add_option("-k,--iterations", route.iterations, "Routing iterations K")
      ->capture_default_str();
  route_cmd->add_option("--form", route.form, "scalar, matrix or both")
      ->check(CLI::IsMember({"scalar", "matrix", "both"}))
      ->capture_default_str();
  route_cmd->add_option("-o,--out", route.out_csv, "Trajectory CSV path")->required();
  route_cmd->add_option("--couplings", route.out_couplings, "Write B and C per iteration as JSON");
  route_cmd->add_option("--svg", route.out_svg, "Write an agreement line plot");
  route_cmd->add_option("--stop-tolerance", route_stop, "Stop once ||C(r+1)-C(r)||_F is below this");

  ExperimentCommand exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the numerical or distribution experiment");
  exp_cmd->add_option("name", exp.name, "numerical or distribution")
      ->required()
      ->check(CLI::IsMember({"numerical", "distribution"}));
  exp_cmd->add_option("-i,--input", exp.input, "Instance JSON (otherwise generated)");
  add_gen_options(*exp_cmd, exp.gen, false);
  exp_cmd->add_option("-k,--iterations", exp.iterations, "Routing iterations K")
      ->capture_default_str();
  exp_cmd->add_option("-o,--out-dir", exp.out_dir, "Output directory")->required();

  CheckCommand check;
  std::string m_range = "2:16", n_range = "2:16", dim_range = "2:8", family = "random";
  auto* check_cmd = app.add_subcommand("check", "Run the invariant suite over seeded instances");
  check_cmd->add_option("--seeds", check.options.seeds, "Number of seeds")->capture_default_str();
  check_cmd->add_option("--seed", check.options.base_seed, "First seed")
      ->envname(kSeedEnv)
      ->capture_default_str();
  check_cmd->add_option("--m-range", m_range, "Input capsule count range lo:hi")
      ->capture_default_str();
  check_cmd->add_option("--n-range", n_range, "Output capsule count range lo:hi")
      ->capture_default_str();
  check_cmd->add_option("--dim-range", dim_range, "Output dimension range lo:hi")
      ->capture_default_str();
  check_cmd->add_option("--tolerance", check.options.tolerance, "Lyapunov gap tolerance")
      ->capture_default_str();
  check_cmd->add_option("-k,--iterations", check.options.iterations, "Routing iterations K")
      ->capture_default_str();
  check_cmd->add_option("--chord-samples", check.options.chord_samples, "Chords per instance")
      ->capture_default_str();
  check_cmd->add_option("--family", family, "random or zero predictions")
      ->check(CLI::IsMember({"random", "zero"}))
      ->capture_default_str();
  check_cmd->add_option("-j,--jobs", check.options.jobs, "Worker threads")->capture_default_str();
  check_cmd->add_option("-o,--out", check.out_csv, "Write the per-seed summary CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return to_int(ExitStatus::kUsageError);
  }

  if (*gen_cmd) return to_int(cmd_gen(gen, out, err));
  if (*route_cmd) {
    route.stop_tolerance = route_stop;
    return to_int(cmd_route(route, out, err));
  }
  if (*exp_cmd) return to_int(cmd_experiment(exp, out, err));
  if (*check_cmd) {
    for (auto [text, range] : {std::pair{&m_range, &check.options.num_input},
                               std::pair{&n_range, &check.options.num_output},
                               std::pair{&dim_range, &check.options.dim}}) {
      if (std::string msg = parse_range(*text, *range); !msg.empty()) {
        err << "check: " << msg << "\n";
        return to_int(ExitStatus::kUsageError);
      }
    }
    check.options.zero_family = family == "zero";
    return to_int(cmd_check(check, out, err));
  }
  return to_int(ExitStatus::kUsageError);
}

}  // namespace capsroute::cli
