#include <doctest.h>

#include <fstream>
#include <sstream>

#include "tchain/experiments.hpp"

using namespace tchain;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tchain-test-" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::BadInitialData;  // marker: nothing thrown
}

}  // namespace

TEST_CASE("layout and field JSON round trip") {
  const auto layout = build_chain({0, 1.5, 4}, 4, 2);
  const auto back = io::layout_from_json(io::to_json(layout));
  CHECK(back.access_points() == layout.access_points());
  CHECK(back.length() == 4.0);
  CHECK(back.velocity() == 2.0);

  const SpatialGrid grid(4, 0.05);
  const auto x0 = bump_initial(0.6, 0.8, grid);
  const auto f = io::field_from_json(io::to_json(x0));
  CHECK(f.grid == grid);
  CHECK(f.values == x0.values);
  CHECK(code_of([] { io::layout_from_json(io::Json::object()); }) == Errc::Io);
}

TEST_CASE("layout files") {
  TempDir dir;
  const auto text = dir.write("pts.txt", "# access points\n0\n1.5\n\n4\n");
  CHECK(io::read_layout_file(text, 4, 2).access_points() == std::vector<double>{0, 1.5, 4});
  const auto json = dir.write("pts.json", R"({"access_points": [0, 2, 4], "L": 4, "c": 2})");
  CHECK(io::read_layout_file(json, 4, 2).max_gap() == 2.0);

  const auto bad = dir.write("bad.txt", "0\n1\n# comment\n0.5\n3\n");
  try {
    io::read_layout_file(bad, 3, 1);
    FAIL("expected NonMonotone");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonMonotone);
    CHECK(std::string(e.what()).find("bad.txt:4") != std::string::npos);
  }
  CHECK(code_of([&] { io::read_layout_file(dir.path / "missing.txt", 3, 1); }) == Errc::Io);
}

TEST_CASE("field files") {
  TempDir dir;
  const SpatialGrid grid(1, 0.25);
  const auto csv = dir.write("x0.csv", "omega,value\n0,0\n0.25,1\n0.5,2\n0.75,3\n1,4\n");
  CHECK(io::read_field_file(csv, grid).values == Vector::LinSpaced(5, 0, 4));
  const auto json = dir.write("x0.json", R"({"h": 0.25, "values": [0, 1, 2, 3, 4]})");
  CHECK(io::read_field_file(json, grid).values == Vector::LinSpaced(5, 0, 4));
  const auto wrong = dir.write("short.json", R"({"h": 0.5, "values": [0, 1, 2]})");
  CHECK(code_of([&] { io::read_field_file(wrong, grid); }) == Errc::GridMismatch);
}

TEST_CASE("writers") {
  const SpatialGrid grid(1, 0.5);
  const StateField f(grid, Vector::LinSpaced(3, 0, 1));
  std::ostringstream field;
  io::write_field_csv(field, f);
  CHECK(field.str() == "omega,value\n0,0\n0.5,0.5\n1,1\n");

  const auto layout = build_chain({0, 1}, 1, 1);
  const auto pw = PiecewiseField::from_field(ChainPartition(layout, grid), f);
  const Trajectory traj{{0.0, 0.5}, {pw, pw}};
  std::ostringstream csv;
  io::write_trajectory_csv(csv, traj);
  CHECK(csv.str().rfind("t,omega,value\n0,0,0\n", 0) == 0);
  const auto j = io::trajectory_json(traj);
  CHECK(j["times"].size() == 2);
  CHECK(j["fields"][1].size() == 3);

  std::ostringstream control;
  const std::vector<double> times{0.0, 0.25};
  io::write_control_csv(control, times, Eigen::MatrixXd::Ones(2, 2));
  CHECK(control.str() == "t,u_0,u_1\n0,1,1\n0.25,1,1\n");
  CHECK(io::format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("parsing of layout and initial value specs") {
  CHECK(parse_layout_spec("midpoint").scenario == Scenario::Midpoint);
  const auto eq = parse_layout_spec("equidistant:0.5");
  CHECK(eq.scenario == Scenario::Equidistant);
  CHECK(eq.gap == 0.5);
  CHECK(parse_layout_spec("points.txt").scenario == Scenario::File);
  CHECK(code_of([] { parse_layout_spec("equidistant:-1"); }) == Errc::BadParam);
  CHECK(code_of([] { parse_layout_spec("equidistant:x"); }) == Errc::BadParam);

  const auto bump = parse_initial_spec("bump:1,0.5");
  CHECK(bump.bump);
  CHECK(bump.eps1 == 1.0);
  CHECK(bump.eps2 == 0.5);
  CHECK_FALSE(parse_initial_spec("x0.csv").bump);
  CHECK(code_of([] { parse_initial_spec("bump:1"); }) == Errc::BadParam);
}

TEST_CASE("config file") {
  TempDir dir;
  ExperimentSpec spec;
  const auto ini = dir.write("run.ini",
                             "[layout]\nlayout = midpoint\nL = 6\n[solver]\nh = 0.05\nbc = neumann\n"
                             "[experiment]\nlengths = 2,4\nmu = 0\n[check]\nL0 = 3\n");
  apply_config_file(spec, ini);
  CHECK(spec.layout.scenario == Scenario::Midpoint);
  CHECK(spec.L == 6.0);
  CHECK(spec.h == 0.05);
  CHECK(spec.bc == Coupling::Neumann);
  CHECK(spec.lengths == std::vector<double>{2, 4});
  CHECK(spec.L0_bound == 3.0);
  CHECK(spec.c == 2.0);
  CHECK_NOTHROW(spec.validate());

  ExperimentSpec other;
  CHECK(code_of([&] { apply_config_file(other, dir.write("typo.ini", "[solver]\nhh = 1\n")); }) == Errc::BadParam);
  ExperimentSpec bad;
  bad.lengths = {4, 2};
  CHECK(code_of([&] { bad.validate(); }) == Errc::BadParam);
}

TEST_CASE("sweep classification") {
  std::vector<SweepPoint> points;
  for (double L : {2.0, 4.0, 6.0}) {
    points.push_back({L, Scenario::Equidistant, 1.0, 1.0, 1.0, 0, 0, {0, 1, 2}});
    points.push_back({L, Scenario::Midpoint, L * L, 1.0, 1.0, 0, 0, {0, 1, 2}});
  }
  points[1].state_norm = 1.0;  // midpoint L = 2 agrees with equidistant
  const auto c = classify_sweep(points);
  CHECK(c.plateau);
  CHECK(c.plateau_ratio == 1.0);
  CHECK(c.increasing);
  CHECK(c.growth_ratio == 36.0);
  CHECK(c.growth);

  points[5].state_norm = 10.0;  // no longer increasing
  CHECK_FALSE(classify_sweep(points).growth);
}

TEST_CASE("sweep on small domains") {
  ExperimentSpec spec;
  spec.lengths = {2, 3};
  spec.h = 0.05;
  spec.T = 1.0;
  spec.jobs = 2;
  const auto points = sweep_points(spec);
  REQUIRE(points.size() == 4);
  CHECK(points[0].scenario == Scenario::Equidistant);
  CHECK(points[2].scenario == Scenario::Midpoint);
  const auto c = classify_sweep(points);
  CHECK(c.coincident_difference <= 1e-10);
  for (const auto& p : points) CHECK(p.residual <= 1e-8);

  spec.mu = 0.0;
  for (const auto& p : sweep_points(spec)) CHECK(p.state_norm == doctest::Approx(p.state_plain).epsilon(1e-14));
}
