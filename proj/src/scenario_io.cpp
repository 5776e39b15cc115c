#include "msmf/scenario_io.hpp"

#include "msmf/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace msmf {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

std::int64_t integer(const json& j, const std::string& field) {
    if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>()))
        throw ConfigError(field, "expected an integer");
    return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field, "expected a string");
    return j.get<std::string>();
}

std::pair<double, double> range(const json& j, const std::string& field) {
    if (j.is_number()) {
        const double v = number(j, field);
        return {v, v};
    }
    if (!j.is_array() || j.size() != 2) throw ConfigError(field, "expected [min, max]");
    return {number(j[0], field), number(j[1], field)};
}

Point point(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(field, "expected [x, y]");
    return {number(j[0], field), number(j[1], field)};
}

std::int64_t mb(double v) { return std::llround(v * 1e6); }

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "road", "lattice_separation_m", "regional_cluster_cols", "regional_cluster_rows", "d_local_ms",
        "d_regional_ms", "d_p_ms", "bandwidth_mbps", "storage_capacity_gb", "ue_count", "speeds_mps",
        "high_class_fraction", "low_deadline_ms", "high_deadline_ms", "container_size_mb", "ram_size_mb",
        "dirty_rate_per_s", "threshold_md_mbit", "start_time_ms", "start_time_ref_mb", "tau_min_s",
        "relay_latency_ms", "prep_band_m", "lookahead", "report_distance_m", "report_speed_mps", "duration_s",
        "seed", "strategy", "strategies", "spawn"};
    return keys;
}

RoadConfig parse_road(const json& j) {
    if (!j.is_object()) throw ConfigError("road", "expected an object");
    RoadConfig r;
    const std::string kind = j.contains("kind") ? text(j["kind"], "road.kind") : "grid";
    for (const auto& [k, v] : j.items()) {
        const std::string f = "road." + k;
        if (k == "kind") continue;
        if (k == "rows") r.rows = static_cast<int>(integer(v, f));
        else if (k == "cols") r.cols = static_cast<int>(integer(v, f));
        else if (k == "separation_m") r.separation_m = number(v, f);
        else if (k == "from") r.from = point(v, f);
        else if (k == "to") r.to = point(v, f);
        else if (k == "path") r.path = text(v, f);
        else throw ConfigError(f, "unknown key");
    }
    if (kind == "grid") r.kind = RoadKind::Grid;
    else if (kind == "straight") r.kind = RoadKind::Straight;
    else if (kind == "file") r.kind = RoadKind::File;
    else throw ConfigError("road.kind", "expected grid, straight or file");
    return r;
}

}  // namespace

ScenarioConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
    for (const auto& [k, v] : doc.items())
        if (!known_keys().contains(k)) throw ConfigError(k, "unknown key");
    if (!doc.contains("road")) throw ConfigError("road", "required field missing");
    if (!doc.contains("duration_s")) throw ConfigError("duration_s", "required field missing");

    ScenarioConfig c;
    c.road = parse_road(doc["road"]);
    c.duration_s = number(doc["duration_s"], "duration_s");
    auto has = [&](const char* k) { return doc.contains(k); };
    if (has("lattice_separation_m")) c.lattice_separation_m = number(doc["lattice_separation_m"], "lattice_separation_m");
    if (has("regional_cluster_cols"))
        c.regional_cluster_cols = static_cast<int>(integer(doc["regional_cluster_cols"], "regional_cluster_cols"));
    if (has("regional_cluster_rows"))
        c.regional_cluster_rows = static_cast<int>(integer(doc["regional_cluster_rows"], "regional_cluster_rows"));
    if (has("d_local_ms")) c.tiers.d_local_s = number(doc["d_local_ms"], "d_local_ms") / 1000.0;
    if (has("d_regional_ms")) c.tiers.d_regional_s = number(doc["d_regional_ms"], "d_regional_ms") / 1000.0;
    if (has("d_p_ms")) c.tiers.d_p_s = number(doc["d_p_ms"], "d_p_ms") / 1000.0;
    if (has("bandwidth_mbps")) c.tiers.bandwidth_Bps = number(doc["bandwidth_mbps"], "bandwidth_mbps") * 1e6 / 8.0;
    if (has("storage_capacity_gb"))
        c.tiers.storage_capacity_bytes = std::llround(number(doc["storage_capacity_gb"], "storage_capacity_gb") * 1e9);
    if (has("ue_count")) c.ue_count = static_cast<int>(integer(doc["ue_count"], "ue_count"));
    if (has("speeds_mps")) {
        const auto& s = doc["speeds_mps"];
        if (!s.is_array()) throw ConfigError("speeds_mps", "expected an array of numbers");
        c.speeds_mps.clear();
        for (const auto& v : s) c.speeds_mps.push_back(number(v, "speeds_mps"));
    }
    if (has("high_class_fraction")) c.high_class_fraction = number(doc["high_class_fraction"], "high_class_fraction");
    if (has("low_deadline_ms")) c.low_deadline_s = number(doc["low_deadline_ms"], "low_deadline_ms") / 1000.0;
    if (has("high_deadline_ms")) c.high_deadline_s = number(doc["high_deadline_ms"], "high_deadline_ms") / 1000.0;
    if (has("container_size_mb")) {
        const auto [lo, hi] = range(doc["container_size_mb"], "container_size_mb");
        c.container_min_bytes = mb(lo);
        c.container_max_bytes = mb(hi);
    }
    if (has("ram_size_mb")) {
        const auto [lo, hi] = range(doc["ram_size_mb"], "ram_size_mb");
        c.ram_min_bytes = mb(lo);
        c.ram_max_bytes = mb(hi);
    }
    if (has("dirty_rate_per_s")) c.dirty_rate_per_s = number(doc["dirty_rate_per_s"], "dirty_rate_per_s");
    if (has("threshold_md_mbit"))
        c.threshold_bytes = std::llround(number(doc["threshold_md_mbit"], "threshold_md_mbit") * 1e6 / 8.0);
    if (has("start_time_ms")) {
        const auto [lo, hi] = range(doc["start_time_ms"], "start_time_ms");
        c.start.t_min_s = lo / 1000.0;
        c.start.t_max_s = hi / 1000.0;
    }
    if (has("start_time_ref_mb")) {
        const auto [lo, hi] = range(doc["start_time_ref_mb"], "start_time_ref_mb");
        c.start.image_min_bytes = lo * 1e6;
        c.start.image_max_bytes = hi * 1e6;
    }
    if (has("tau_min_s")) c.tau_min_s = number(doc["tau_min_s"], "tau_min_s");
    if (has("relay_latency_ms")) c.relay_latency_s = number(doc["relay_latency_ms"], "relay_latency_ms") / 1000.0;
    if (has("prep_band_m")) c.prep_band_m = number(doc["prep_band_m"], "prep_band_m");
    if (has("lookahead")) {
        const auto v = integer(doc["lookahead"], "lookahead");
        if (v < 1) throw ConfigError("lookahead", "must be >= 1");
        c.lookahead = static_cast<std::size_t>(v);
    }
    if (has("report_distance_m")) c.report.distance_m = number(doc["report_distance_m"], "report_distance_m");
    if (has("report_speed_mps")) c.report.speed_change_mps = number(doc["report_speed_mps"], "report_speed_mps");
    if (has("seed")) {
        const auto& s = doc["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (has("strategy")) c.strategy = parse_strategy(text(doc["strategy"], "strategy"));
    if (has("strategies")) {
        const auto& s = doc["strategies"];
        if (!s.is_array()) throw ConfigError("strategies", "expected an array of strategy names");
        c.strategies.clear();
        for (const auto& v : s) {
            try {
                c.strategies.push_back(parse_strategy(text(v, "strategies")));
            } catch (const ConfigError& e) {
                throw ConfigError("strategies", e.what());
            }
        }
    }
    if (has("spawn")) {
        const auto s = text(doc["spawn"], "spawn");
        if (s == "random") c.spawn = SpawnMode::Random;
        else if (s == "route") c.spawn = SpawnMode::Route;
        else throw ConfigError("spawn", "expected random or route");
    }
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string apply_overrides(std::string_view json_text, std::span<const std::string> overrides) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must look like KEY=VALUE");
        std::string key = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        if (key == "speed") {
            key = "speeds_mps";
            value = json::array({value});
        }
        json* node = &doc;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError(key, "empty path component");
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            json& child = (*node)[part];
            if (child.is_null()) child = json::object();
            if (!child.is_object()) throw ConfigError(key, "cannot descend into a non-object");
            node = &child;
            start = dot + 1;
        }
    }
    return doc.dump();
}

std::string config_to_json(const ScenarioConfig& c) {
    ojson road;
    switch (c.road.kind) {
        case RoadKind::Grid:
            road["kind"] = "grid";
            road["rows"] = c.road.rows;
            road["cols"] = c.road.cols;
            road["separation_m"] = c.road.separation_m;
            break;
        case RoadKind::Straight:
            road["kind"] = "straight";
            road["from"] = {c.road.from.x, c.road.from.y};
            road["to"] = {c.road.to.x, c.road.to.y};
            break;
        case RoadKind::File:
            road["kind"] = "file";
            road["path"] = c.road.path;
            break;
    }
    ojson j;
    j["road"] = road;
    j["lattice_separation_m"] = c.lattice_separation_m;
    j["regional_cluster_cols"] = c.regional_cluster_cols;
    j["regional_cluster_rows"] = c.regional_cluster_rows;
    j["d_local_ms"] = c.tiers.d_local_s * 1000.0;
    j["d_regional_ms"] = c.tiers.d_regional_s * 1000.0;
    j["d_p_ms"] = c.tiers.d_p_s * 1000.0;
    j["bandwidth_mbps"] = c.tiers.bandwidth_Bps * 8.0 / 1e6;
    j["storage_capacity_gb"] = static_cast<double>(c.tiers.storage_capacity_bytes) / 1e9;
    j["ue_count"] = c.ue_count;
    j["speeds_mps"] = c.speeds_mps;
    j["high_class_fraction"] = c.high_class_fraction;
    j["low_deadline_ms"] = c.low_deadline_s * 1000.0;
    j["high_deadline_ms"] = c.high_deadline_s * 1000.0;
    j["container_size_mb"] = {static_cast<double>(c.container_min_bytes) / 1e6,
                              static_cast<double>(c.container_max_bytes) / 1e6};
    j["ram_size_mb"] = {static_cast<double>(c.ram_min_bytes) / 1e6, static_cast<double>(c.ram_max_bytes) / 1e6};
    j["dirty_rate_per_s"] = c.dirty_rate_per_s;
    j["threshold_md_mbit"] = static_cast<double>(c.threshold_bytes) * 8.0 / 1e6;
    j["start_time_ms"] = {c.start.t_min_s * 1000.0, c.start.t_max_s * 1000.0};
    j["start_time_ref_mb"] = {c.start.image_min_bytes / 1e6, c.start.image_max_bytes / 1e6};
    j["tau_min_s"] = c.tau_min_s;
    j["relay_latency_ms"] = c.relay_latency_s * 1000.0;
    j["prep_band_m"] = c.prep_band_m;
    j["lookahead"] = c.lookahead;
    j["report_distance_m"] = c.report.distance_m;
    j["report_speed_mps"] = c.report.speed_change_mps;
    j["duration_s"] = c.duration_s;
    j["seed"] = c.seed;
    j["strategy"] = std::string(to_string(c.strategy));
    ojson strategies = ojson::array();
    for (auto k : c.strategies) strategies.push_back(std::string(to_string(k)));
    j["strategies"] = strategies;
    j["spawn"] = c.spawn == SpawnMode::Random ? "random" : "route";
    return j.dump(2) + "\n";
}

void write_migrations_csv(std::ostream& out, std::span<const RunReport> reports) {
    out << "run_id,ue_id,strategy,speed_mps,source_server,target_server,t_start_s,t_handoff_s,traffic_bytes,"
           "downtime_s,kind,relay_hops,deadline_violated\n";
    for (const auto& rep : reports)
        for (const auto& r : rep.records)
            out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.run_id, r.ue_id, to_string(r.strategy),
                               r.speed_mps, r.source, r.target, r.t_start, r.t_handoff, r.traffic_bytes, r.downtime_s,
                               to_string(r.kind), r.relay_hops, r.deadline_violated ? 1 : 0);
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "strategy,speed_mps,records,mean_traffic_bytes,mean_downtime_s,ue_count,traffic_per_ue_bytes\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{},{},{}\n", to_string(r.strategy), r.speed_mps, r.records,
                           r.mean_traffic_bytes, r.mean_downtime_s ? fmt::format("{}", *r.mean_downtime_s) : "",
                           r.ue_count, r.traffic_per_ue_bytes);
}

}  // namespace msmf
