#pragma once

// Scenario configuration documents and report CSV output.
//
// Config keys carry their unit in the name (bandwidth_mbps, d_local_ms,
// container_size_mb, threshold_md_mbit, ...). "road" and "duration_s" are
// required; everything else falls back to the defaults in ScenarioConfig.

#include "msmf/simcore.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace msmf {

ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies KEY=VALUE to a config document before parsing. Dotted keys reach
/// into objects (road.kind=straight); VALUE is read as JSON when it parses,
/// else as a string. "speed=V" replaces speeds_mps with [V].
std::string apply_overrides(std::string_view json_text, std::span<const std::string> overrides);

/// Fully resolved config, every field present, in the input key format.
std::string config_to_json(const ScenarioConfig& config);

void write_migrations_csv(std::ostream& out, std::span<const RunReport> reports);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace msmf
