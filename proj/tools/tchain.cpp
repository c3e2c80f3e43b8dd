// Command-line front end: simulate, ocp, sweep, check, validate.
//
// Exit codes: 0 success, 1 validation failure (failed checks or rejected input
// data), 2 usage error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tchain/experiments.hpp"

namespace {

using tchain::ExperimentSpec;

constexpr int kSuccess = 0;
constexpr int kValidationFailure = 1;
constexpr int kUsageError = 2;

// Raw flag values; a flag only overrides the config file when it was given.
struct Flags {
  std::string config;
  std::string layout;
  std::string x0;
  std::string bc;
  std::string mode;
  std::string out;
  std::string out_dir;
  std::string lengths;
  double L = 0.0, c = 0.0, h = 0.0, tau = 0.0, alpha = 0.0, T = 0.0, mu = 0.0;
  double L0 = 0.0, M = 0.0, k = 0.0, eps = 0.0;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  tchain::Index frames = 0;
};

struct Registered {
  std::map<std::string, CLI::Option*> options;
  bool given(const std::string& name) const {
    const auto it = options.find(name);
    return it != options.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App& cmd, Flags& f, Registered& r) {
  r.options["config"] = cmd.add_option("--config", f.config, "INI file with [layout], [solver], [experiment] sections");
  r.options["layout"] = cmd.add_option("--layout", f.layout, "equidistant:<gap> | midpoint | <file>");
  r.options["L"] = cmd.add_option("--L", f.L, "domain length");
  r.options["c"] = cmd.add_option("--c", f.c, "transport velocity");
  r.options["h"] = cmd.add_option("--h", f.h, "spatial step");
  r.options["x0"] = cmd.add_option("--x0", f.x0, "bump:<eps1>,<eps2> | <file>");
  r.options["out_dir"] = cmd.add_option("--out-dir", f.out_dir,
                                        std::string("output directory (overrides ") +
                                            tchain::kOutDirEnv + ")");
}

void add_time(CLI::App& cmd, Flags& f, Registered& r) {
  r.options["T"] = cmd.add_option("--T", f.T, "time horizon");
  r.options["tau"] = cmd.add_option("--tau", f.tau, "time step (default h/c)");
}

void add_ocp(CLI::App& cmd, Flags& f, Registered& r) {
  add_time(cmd, f, r);
  r.options["alpha"] = cmd.add_option("--alpha", f.alpha, "control weight");
  r.options["mu"] = cmd.add_option("--mu", f.mu, "spatial weight rate of the reported norms");
}

ExperimentSpec build_spec(const Flags& f, const Registered& r) {
  ExperimentSpec spec;
  if (r.given("config")) tchain::apply_config_file(spec, f.config);
  if (const char* env = std::getenv(tchain::kOutDirEnv); env && *env) spec.out_dir = env;
  if (r.given("layout")) spec.layout = tchain::parse_layout_spec(f.layout);
  if (r.given("x0")) spec.x0 = tchain::parse_initial_spec(f.x0);
  if (r.given("L")) spec.L = f.L;
  if (r.given("c")) spec.c = f.c;
  if (r.given("h")) spec.h = f.h;
  if (r.given("tau")) spec.tau = f.tau;
  if (r.given("alpha")) spec.alpha = f.alpha;
  if (r.given("T")) spec.T = f.T;
  if (r.given("mu")) spec.mu = f.mu;
  if (r.given("bc")) spec.bc = f.bc == "neumann" ? tchain::Coupling::Neumann : tchain::Coupling::Dirichlet;
  if (r.given("mode"))
    spec.mode = f.mode == "autonomous" ? tchain::SimulationMode::Autonomous : tchain::SimulationMode::Feedback;
  if (r.given("out")) spec.format = f.out == "json" ? tchain::OutputFormat::Json : tchain::OutputFormat::Csv;
  if (r.given("out_dir")) spec.out_dir = f.out_dir;
  if (r.given("seed")) spec.seed = f.seed;
  if (r.given("jobs")) spec.jobs = f.jobs;
  if (r.given("frames")) spec.frames = f.frames;
  if (r.given("L0")) spec.L0_bound = f.L0;
  if (r.given("M")) spec.M = f.M;
  if (r.given("k")) spec.k = f.k;
  if (r.given("eps")) spec.eps = f.eps;
  if (r.given("lengths")) {
    spec.lengths.clear();
    std::stringstream in(f.lengths);
    std::string token;
    while (std::getline(in, token, ',')) {
      try {
        spec.lengths.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw tchain::Error(tchain::Errc::BadParam, "--lengths: not a number: '" + token + "'");
      }
    }
  }
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chains of transport equations: simulation, stabilization, optimal control"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");  // -h would clash with --h
  Flags f;
  std::map<std::string, Registered> registered;

  auto* simulate = app.add_subcommand("simulate", "closed-loop or autonomous simulation");
  add_common(*simulate, f, registered["simulate"]);
  add_time(*simulate, f, registered["simulate"]);
  {
    auto& r = registered["simulate"];
    r.options["bc"] = simulate->add_option("--bc", f.bc, "coupling")->check(CLI::IsMember({"dirichlet", "neumann"}));
    r.options["mode"] = simulate->add_option("--mode", f.mode, "control")->check(CLI::IsMember({"feedback", "autonomous"}));
    r.options["out"] = simulate->add_option("--out", f.out, "trajectory format")->check(CLI::IsMember({"csv", "json"}));
    r.options["frames"] = simulate->add_option("--frames", f.frames, "stored time slices");
  }

  auto* ocp = app.add_subcommand("ocp", "linear-quadratic optimal control");
  add_common(*ocp, f, registered["ocp"]);
  add_ocp(*ocp, f, registered["ocp"]);
  registered["ocp"].options["out"] =
      ocp->add_option("--out", f.out, "trajectory format")->check(CLI::IsMember({"csv", "json"}));

  auto* sweep = app.add_subcommand("sweep", "weighted norms of optimal solutions against L");
  add_common(*sweep, f, registered["sweep"]);
  add_ocp(*sweep, f, registered["sweep"]);
  registered["sweep"].options["lengths"] = sweep->add_option("--lengths", f.lengths, "comma-separated, increasing");
  registered["sweep"].options["jobs"] = sweep->add_option("--jobs", f.jobs, "worker threads (0: all cores)");

  auto* check = app.add_subcommand("check", "gap criterion and counterexample certificate");
  add_common(*check, f, registered["check"]);
  {
    auto& r = registered["check"];
    r.options["L0"] = check->add_option("--L0", f.L0, "gap bound; exit 1 when exceeded");
    r.options["M"] = check->add_option("--M", f.M, "envelope constant of the certificate");
    r.options["k"] = check->add_option("--k", f.k, "decay rate of the certificate");
    r.options["eps"] = check->add_option("--eps", f.eps, "support width of the certificate");
  }

  auto* validate = app.add_subcommand("validate", "oracle suites");
  add_common(*validate, f, registered["validate"]);
  registered["validate"].options["seed"] = validate->add_option("--seed", f.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsageError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  ExperimentSpec spec;
  try {
    spec = build_spec(f, registered[chosen->get_name()]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    tchain::RunReport report;
    const std::string name = chosen->get_name();
    if (name == "simulate") report = tchain::run_simulate(spec);
    if (name == "ocp") report = tchain::run_ocp(spec);
    if (name == "sweep") report = tchain::run_sweep(spec);
    if (name == "check") report = tchain::run_check(spec);
    if (name == "validate") report = tchain::run_validate(spec);
    std::cout << report.summary.dump(2) << "\n";
    return report.pass ? kSuccess : kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
}
