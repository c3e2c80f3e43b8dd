#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "tchain/core.hpp"
#include "tchain/feedback.hpp"
#include "tchain/stabilizability.hpp"

namespace tchain::io {

using Json = nlohmann::ordered_json;

Json to_json(const ChainLayout& layout);
Json to_json(const StateField& field);
Json to_json(const GapReport& report);
Json to_json(const Certificate& certificate);
Json to_json(const DecayConstants& constants);
Json to_json(const EnvelopeReport& report);
Json to_json(const SubdomainEnvelopeReport& report);

/// {"access_points": [...], "L": .., "c": ..}. Throws Io on missing keys.
ChainLayout layout_from_json(const Json& j);
/// {"h": .., "values": [...]}.
StateField field_from_json(const Json& j);

/// Layout file: JSON as above, or plain text with one access point per line
/// ('#' starts a comment) combined with L and c. NonMonotone errors name the line.
ChainLayout read_layout_file(const std::filesystem::path& path, double L, double c);

/// Field file: JSON {"h", "values"} or CSV with header omega,value. The result must
/// live on `grid`; throws GridMismatch otherwise.
StateField read_field_file(const std::filesystem::path& path, const SpatialGrid& grid);

/// omega,value
void write_field_csv(std::ostream& out, const StateField& field);
/// t,omega,value; piecewise states are flattened to the full grid.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
/// {"times": [...], "fields": [[...], ...]}
Json trajectory_json(const Trajectory& trajectory);
/// t,u_0,u_1,...
void write_control_csv(std::ostream& out, std::span<const double> times,
                       const Eigen::MatrixXd& values);

/// Writes text to path, creating parent directories. Throws Io.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

/// Fixed-precision number formatting shared by all writers.
std::string format_number(double value);

}  // namespace tchain::io
