#pragma once

// Discrete-event simulation of UEs, coverage crossings and migrations.

#include "msmf/migration.hpp"
#include "msmf/mobility.hpp"
#include "msmf/prediction.hpp"
#include "msmf/strategy.hpp"
#include "msmf/topology.hpp"

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

namespace msmf {

enum class EventKind : std::uint8_t {
    CoverageBoundary,
    PrepareBandEntry,
    TransferComplete,
    IterationTrigger,
    TraceEnd,
    NodeArrival,
};

std::string_view to_string(EventKind k) noexcept;

struct Event {
    double time = 0.0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::TraceEnd;
    std::size_t ue = 0;
    std::size_t leg = 0;
    ServerId server = kNoServer;
    double offset = 0.0;
    std::size_t session = 0;
};

/// Min-queue on (time, sequence); the sequence is assigned on push.
class EventQueue {
public:
    const Event& push(Event e);
    Event pop();
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    std::uint64_t pushed() const noexcept { return next_seq_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

enum class RoadKind : std::uint8_t { Grid, Straight, File };
enum class SpawnMode : std::uint8_t { Random, Route };

struct RoadConfig {
    RoadKind kind = RoadKind::Grid;
    int rows = 6;
    int cols = 6;
    double separation_m = 500.0;
    Point from{0.0, 0.0};
    Point to{5000.0, 0.0};
    std::string path;
};

struct ScenarioConfig {
    RoadConfig road;
    double lattice_separation_m = 500.0;
    int regional_cluster_cols = 3;
    int regional_cluster_rows = 3;
    TierParams tiers;

    int ue_count = 100;
    std::vector<double> speeds_mps{5.0 / 3.6, 25.0 / 3.6, 50.0 / 3.6, 75.0 / 3.6, 100.0 / 3.6};
    double high_class_fraction = 0.5;
    double low_deadline_s = 0.030;
    double high_deadline_s = 0.150;

    std::int64_t container_min_bytes = 100'000'000;
    std::int64_t container_max_bytes = 2'000'000'000;
    std::int64_t ram_min_bytes = 10'000'000;
    std::int64_t ram_max_bytes = 200'000'000;
    double dirty_rate_per_s = 0.01;
    std::int64_t threshold_bytes = 5'000'000;
    StartTimeModel start;

    double tau_min_s = 10.0;
    double relay_latency_s = 0.005;
    double prep_band_m = 200.0;
    std::size_t lookahead = 8;
    ReportThresholds report;

    double duration_s = 3600.0;
    std::uint64_t seed = 1;
    StrategyKind strategy = StrategyKind::PmOpTier;
    std::vector<StrategyKind> strategies{StrategyKind::Nearest, StrategyKind::PM, StrategyKind::PmOp,
                                         StrategyKind::PmTier, StrategyKind::PmOpTier};
    SpawnMode spawn = SpawnMode::Random;
};

/// Throws ConfigError naming the first offending field.
void validate(const ScenarioConfig& config);

/// Road graph, lattice, tiers and coverage map for a config.
struct World {
    RoadGraph graph;
    Topology topology;
    MrMap mr;
};

RoadGraph build_road(const RoadConfig& road);
World build_world(const ScenarioConfig& config);

struct UeSummary {
    std::int64_t ue_id = 0;
    double speed_mps = 0.0;
    LatencyClass::Name latency_class = LatencyClass::Name::Low;
    Tier tier = Tier::Local;
    bool deadline_violation = false;
    ServerId initial_server = kNoServer;
    std::int64_t image_bytes = 0;
    std::int64_t ram_bytes = 0;
    /// Distinct servers entered along the trip on the UE's tier, in order.
    std::vector<ServerId> visited;
};

struct RunReport {
    std::int64_t run_id = 0;
    StrategyKind strategy = StrategyKind::PmOpTier;
    std::uint64_t seed = 0;
    std::vector<MigrationRecord> records;
    std::vector<UeSummary> ues;
    std::int64_t session_bytes = 0;
    std::int64_t storage_rejections = 0;
    /// Every coverage-boundary crossing resolves as exactly one of: a
    /// completed precopy, a cold transfer, a relay across a skipped server,
    /// or a return into the serving server's coverage.
    std::int64_t boundary_crossings = 0;
    std::int64_t precopy_resolutions = 0;
    std::int64_t cold_resolutions = 0;
    std::int64_t relay_resolutions = 0;
    std::int64_t return_resolutions = 0;
    std::uint64_t events_processed = 0;
};

RunReport run(const ScenarioConfig& config);
/// Same as run() over a prebuilt world; `mobility_seed` drives UE attributes and routes.
RunReport run(const ScenarioConfig& config, const World& world, std::int64_t run_id, std::uint64_t mobility_seed);

/// Seed for sweep cell (speed index, strategy index); distinct across cells.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t speed_index, std::size_t strategy_index) noexcept;
/// Mobility seed shared by every strategy at one speed, so strategies see the same routes.
std::uint64_t mobility_seed(std::uint64_t seed, std::size_t speed_index) noexcept;

/// One run per (speed, strategy) cell, speed-major. With `parallel` cells run
/// on worker threads; results are identical either way.
std::vector<RunReport> sweep(const ScenarioConfig& config, std::span<const double> speeds,
                             std::span<const StrategyKind> strategies, bool parallel = false);

struct SummaryRow {
    StrategyKind strategy = StrategyKind::Nearest;
    double speed_mps = 0.0;
    std::int64_t records = 0;
    double mean_traffic_bytes = 0.0;
    std::optional<double> mean_downtime_s;
    std::int64_t ue_count = 0;
    double traffic_per_ue_bytes = 0.0;
};

/// Means per (strategy, speed), every record kind included; rows sorted by
/// strategy then speed.
std::vector<SummaryRow> aggregate(std::span<const RunReport> reports);

}  // namespace msmf
