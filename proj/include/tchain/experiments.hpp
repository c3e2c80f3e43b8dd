#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tchain/io.hpp"

namespace tchain {

enum class Scenario { Equidistant, Midpoint, File };

struct LayoutSpec {
  Scenario scenario = Scenario::Equidistant;
  double gap = 1.0;
  std::filesystem::path file;
};

/// "equidistant:<gap>", "midpoint", or a path. Throws BadParam.
LayoutSpec parse_layout_spec(const std::string& text);

struct InitialSpec {
  bool bump = true;
  double eps1 = 0.6;
  double eps2 = 0.8;
  std::filesystem::path file;
};

/// "bump:<eps1>,<eps2>" or a path. Throws BadParam.
InitialSpec parse_initial_spec(const std::string& text);

enum class SimulationMode { Feedback, Autonomous };
enum class OutputFormat { Csv, Json };

struct ExperimentSpec {
  LayoutSpec layout;
  double L = 10.0;
  double c = 2.0;
  double h = 0.01;
  std::optional<double> tau;  // h / c when unset
  double alpha = 0.156;
  double T = 5.0;
  double mu = 0.5;
  Coupling bc = Coupling::Dirichlet;
  SimulationMode mode = SimulationMode::Feedback;
  InitialSpec x0;
  std::vector<double> lengths{2.0, 4.0, 6.0, 8.0, 10.0};
  std::filesystem::path out_dir = "out";
  OutputFormat format = OutputFormat::Csv;
  std::uint64_t seed = 1;
  unsigned jobs = 0;  // 0: hardware concurrency
  Index frames = 101;

  // check
  std::optional<double> L0_bound;
  double M = 7.38905609893065;  // e^2
  double k = 2.0;
  double eps = 0.1;

  /// Throws BadParam on inconsistent values.
  void validate() const;
  double time_step() const { return tau ? *tau : h / c; }
};

/// Reads an INI document with sections [layout], [solver], [experiment] into spec.
/// Unknown keys raise BadParam so typos do not pass silently.
void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path);

/// Name of the environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "TCHAIN_OUT_DIR";

ChainLayout make_layout(const ExperimentSpec& spec, double L);
StateField make_initial(const ExperimentSpec& spec, const SpatialGrid& grid);

struct RunReport {
  io::Json summary;
  std::vector<std::filesystem::path> files;
  bool pass = true;
};

/// Closed-loop or autonomous simulation with envelope and extinction reports.
RunReport run_simulate(const ExperimentSpec& spec);

/// Optimal control solve; writes state, adjoint and control data and a summary.
RunReport run_ocp(const ExperimentSpec& spec);

struct SweepPoint {
  double L = 0.0;
  Scenario scenario = Scenario::Equidistant;
  double state_norm = 0.0;    // weighted space-time norm
  double costate_norm = 0.0;  // same norm of the adjoint
  double state_plain = 0.0;   // unweighted space-time norm
  double cost = 0.0;
  double residual = 0.0;
  std::vector<double> access_points;
};

struct SweepClassification {
  double plateau_ratio = 0.0;  // equidistant: value(L_max) / value(L_mid)
  bool plateau = false;        // plateau_ratio <= 1.1
  bool increasing = false;     // midpoint: strictly increasing
  double growth_ratio = 0.0;   // midpoint: value(L_max) / value(L_min)
  bool growth = false;         // increasing and growth_ratio >= 2
  double coincident_difference = 0.0;  // max |difference| where the layouts agree
};

/// Sweep points for both scenarios, solved in a worker pool. Deterministic order:
/// by scenario, then by L.
std::vector<SweepPoint> sweep_points(const ExperimentSpec& spec);
SweepClassification classify_sweep(const std::vector<SweepPoint>& points);
RunReport run_sweep(const ExperimentSpec& spec);

/// Gap report, reversed-chain report and counterexample certificate.
RunReport run_check(const ExperimentSpec& spec);

/// Oracle suites; failures are reported in the summary, never thrown.
RunReport run_validate(const ExperimentSpec& spec);

std::string_view to_string(Scenario scenario);

}  // namespace tchain
