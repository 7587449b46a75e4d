#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "fovtopo/fov.hpp"
#include "fovtopo/graph.hpp"
#include "fovtopo/sim.hpp"

namespace fovtopo::io {

/// 17 significant digits; non-finite values become `null`.
std::string format_real(double v);

std::string read_file(const std::filesystem::path& path);

/// {"n": int, "edges": [[tail, head], ...]}. Malformed documents throw ConfigError; structural
/// violations (self-loops, duplicates) throw InvalidGraphError.
DirectedGraph parse_graph(std::string_view text);

std::string certificate_json(const StabilityCertificate& c);

/// Sector document: {"heading", "central_angle", "range", "approx"?: {...}}.
SensingSector parse_sector(std::string_view text);
std::string approximation_json(const FovApproximation& a);
std::string quality_json(const ApproximationQuality& q);

ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Header `t,agent,x,y,heading,ux,uy,meas_x,meas_y,energy`, one row per agent per snapshot.
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);
/// One JSON object per line.
void write_events_jsonl(std::ostream& out, const EventLog& events);
std::string summary_json(const RunSummary& summary, const EnergyTrace& trace,
                         const ScenarioConfig& config);

}  // namespace fovtopo::io
