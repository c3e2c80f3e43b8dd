#include "tchain/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tchain::io {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool looks_like_json(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && (text[first] == '{' || text[first] == '[');
}

Json parse_json(const std::string& text, const fs::path& path) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::Io, path.string() + ": " + e.what());
  }
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::Io, std::string("missing key ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(Errc::Io, std::string("bad value for ") + key + ": " + e.what());
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& token, const fs::path& path, std::size_t line) {
  std::size_t used = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": not a number: '" << token << "'";
    throw Error(Errc::Io, msg.str());
  }
  return value;
}

Json number_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

}  // namespace

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

Json to_json(const ChainLayout& layout) {
  return Json{{"access_points", layout.access_points()},
              {"L", layout.length()},
              {"c", layout.velocity()}};
}

Json to_json(const StateField& field) {
  return Json{{"h", field.grid.spacing()},
              {"values", std::vector<double>(field.values.begin(), field.values.end())}};
}

Json to_json(const GapReport& report) {
  return Json{{"max_gap", report.max_gap},
              {"argmax", report.argmax},
              {"horizon", report.horizon},
              {"bound", number_or_null(report.bound)},
              {"stabilizable", report.stabilizable},
              {"L0", report.L0 ? Json(*report.L0) : Json(nullptr)}};
}

Json to_json(const Certificate& certificate) {
  return Json{{"L0_target", certificate.L0_target},
              {"gap_index", certificate.gap_index},
              {"gap", {certificate.gap.lo, certificate.gap.hi}},
              {"t_star", certificate.t_star},
              {"support", {certificate.support.lo, certificate.support.hi}},
              {"epsilon", certificate.epsilon},
              {"envelope_factor", certificate.envelope_factor}};
}

Json to_json(const DecayConstants& constants) {
  Json j{{"variant", constants.variant == Coupling::Dirichlet ? "dirichlet" : "neumann"},
         {"M", constants.M},
         {"k", constants.k}};
  if (constants.variant == Coupling::Neumann) {
    j["K1"] = constants.K1;
    j["K2"] = constants.K2;
    j["M1"] = constants.M1;
    j["M2"] = constants.M2;
    j["c0"] = constants.c0;
    j["dt"] = constants.dt;
  }
  return j;
}

Json to_json(const EnvelopeReport& report) {
  return Json{{"max_ratio", report.max_ratio},
              {"worst_time", report.worst_time},
              {"tolerance", report.tolerance},
              {"pass", report.pass},
              {"vacuous", report.vacuous}};
}

Json to_json(const SubdomainEnvelopeReport& report) {
  return Json{{"max_ratio", number_or_null(report.max_ratio)},
              {"worst_subdomain", report.worst_subdomain},
              {"worst_time", report.worst_time},
              {"tolerance", report.tolerance},
              {"pass", report.pass}};
}

ChainLayout layout_from_json(const Json& j) {
  return ChainLayout(require<std::vector<double>>(j, "access_points"), require<double>(j, "L"),
                     require<double>(j, "c"));
}

StateField field_from_json(const Json& j) {
  const auto values = require<std::vector<double>>(j, "values");
  if (values.size() < 2) throw Error(Errc::Io, "field needs at least two values");
  const double h = require<double>(j, "h");
  const SpatialGrid grid(h * static_cast<double>(values.size() - 1), h);
  return StateField(grid, Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
}

ChainLayout read_layout_file(const fs::path& path, double L, double c) {
  const std::string text = read_all(path);
  if (looks_like_json(text)) return layout_from_json(parse_json(text, path));

  std::vector<double> points;
  std::istringstream in(text);
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const double a = parse_number(content, path, number);
    if (!std::isfinite(a) || (points.empty() && a != 0.0) || (!points.empty() && !(a > points.back()))) {
      std::ostringstream msg;
      msg << path.string() << ":" << number << ": access point " << content
          << (points.empty() ? " must be 0" : " does not exceed its predecessor");
      throw Error(Errc::NonMonotone, msg.str());
    }
    points.push_back(a);
  }
  if (points.empty()) throw Error(Errc::NonMonotone, path.string() + ": no access points");
  return ChainLayout(std::move(points), L, c);
}

StateField read_field_file(const fs::path& path, const SpatialGrid& grid) {
  const std::string text = read_all(path);
  StateField field = StateField::zero(grid);
  if (looks_like_json(text)) {
    field = field_from_json(parse_json(text, path));
  } else {
    std::vector<double> omega;
    std::vector<double> values;
    std::istringstream in(text);
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
      const std::string content = trim(line);
      if (content.empty() || content[0] == '#') continue;
      if (number == 1 && content.find_first_of("0123456789") != 0 && content[0] != '-' &&
          content[0] != '.')
        continue;  // header
      const auto comma = content.find(',');
      if (comma == std::string::npos) {
        std::ostringstream msg;
        msg << path.string() << ":" << number << ": expected omega,value";
        throw Error(Errc::Io, msg.str());
      }
      omega.push_back(parse_number(trim(content.substr(0, comma)), path, number));
      values.push_back(parse_number(trim(content.substr(comma + 1)), path, number));
    }
    if (values.size() < 2) throw Error(Errc::Io, path.string() + ": need at least two rows");
    const double h = (omega.back() - omega.front()) / static_cast<double>(omega.size() - 1);
    for (std::size_t j = 0; j < omega.size(); ++j) {
      if (std::abs(omega[j] - h * static_cast<double>(j)) > 1e-9 * std::max(1.0, omega.back()))
        throw Error(Errc::GridMismatch, path.string() + ": nodes must be uniform and start at 0");
    }
    const SpatialGrid file_grid(omega.back(), h);
    field = StateField(file_grid, Eigen::Map<const Vector>(values.data(),
                                                           static_cast<Index>(values.size())));
  }
  if (!(field.grid == grid))
    throw Error(Errc::GridMismatch, path.string() + ": field grid differs from (L, h)");
  return field;
}

void write_field_csv(std::ostream& out, const StateField& field) {
  out << "omega,value\n";
  for (Index j = 0; j < field.grid.size(); ++j)
    out << format_number(field.grid.node(j)) << ',' << format_number(field.values(j)) << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,omega,value\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const StateField field = trajectory.states[i].to_field();
    const std::string t = format_number(trajectory.times[i]);
    for (Index j = 0; j < field.grid.size(); ++j)
      out << t << ',' << format_number(field.grid.node(j)) << ','
          << format_number(field.values(j)) << '\n';
  }
}

Json trajectory_json(const Trajectory& trajectory) {
  Json fields = Json::array();
  for (const auto& state : trajectory.states) {
    const StateField field = state.to_field();
    fields.push_back(std::vector<double>(field.values.begin(), field.values.end()));
  }
  return Json{{"times", trajectory.times}, {"fields", std::move(fields)}};
}

void write_control_csv(std::ostream& out, std::span<const double> times,
                       const Eigen::MatrixXd& values) {
  out << 't';
  for (Index p = 0; p < values.cols(); ++p) out << ",u_" << p;
  out << '\n';
  for (Index k = 0; k < values.rows(); ++k) {
    out << format_number(times[static_cast<std::size_t>(k)]);
    for (Index p = 0; p < values.cols(); ++p) out << ',' << format_number(values(k, p));
    out << '\n';
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(Errc::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace tchain::io
