#pragma once

// Vehicle trajectories on the road graph: generation, CSV ingestion, and the
// kinematic state the predictor consumes.

#include "msmf/latency.hpp"
#include "msmf/roadnet.hpp"
#include "msmf/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace msmf {

struct TraceSample {
    double t = 0.0;
    Point point;
};

struct Trace {
    std::int64_t ue_id = 0;
    std::vector<TraceSample> samples;
};

/// What the controller last heard from a UE.
struct ReportedStatus {
    RoadPosition pos;
    Point point;
    double speed = 0.0;
};

struct UeState {
    std::int64_t ue_id = 0;
    RoadPosition pos;
    double speed = 0.0;
    LatencyClass latency_class;
    ServerId serving_server = kNoServer;
    std::optional<ReportedStatus> reported;
};

struct ReportThresholds {
    double distance_m = 50.0;
    double speed_change_mps = 1.0;
};

/// Seeded uniform position: segment, offset and heading.
RoadPosition random_position(const RoadGraph& graph, Rng& rng);

/// Constant-speed random trip sampled every `dt` seconds on [0, duration].
Trace generate_trip(const RoadGraph& graph, std::uint64_t seed, double speed, double duration, double dt,
                    std::int64_t ue_id = 0);

/// One stretch of constant-speed travel on a single segment.
struct Leg {
    SegmentId segment = 0;
    Heading heading = Heading::Forward;
    double from_offset = 0.0;
    double to_offset = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
};

/// Continuous trip as legs; consecutive legs meet at nodes or dead-end turns.
struct TripPlan {
    std::vector<Leg> legs;
    /// Set when the trip stopped at a dead end before the duration ran out.
    bool left_network = false;

    double end_time() const noexcept { return legs.empty() ? 0.0 : legs.back().t_end; }
};

/// Plans travel from `start` for `duration` seconds. Turns are drawn from
/// `turns` exactly as advance() draws them. With `stop_at_dead_end` the trip
/// ends on reaching a dead end instead of turning around.
TripPlan plan_trip(const RoadGraph& graph, RoadPosition start, double speed, double duration, Rng& turns,
                   bool stop_at_dead_end = false);

/// Position on a leg at time t (clamped to the leg).
RoadPosition position_on_leg(const Leg& leg, double t);

struct TraceFormat {
    /// Origin for lat/lon input; a "# origin,<lat>,<lon>" line in the file also sets it.
    std::optional<GeoOrigin> origin;
};

/// Reads CSV with header "ue_id,t_s,x_m,y_m" or "ue_id,t_s,lat,lon".
/// Traces come back in order of first appearance.
std::vector<Trace> ingest_traces(std::istream& in, const TraceFormat& format = {});

/// Single-UE variant; rejects files holding more than one ue_id.
Trace ingest_trace(std::istream& in, const TraceFormat& format = {});

void write_traces_csv(std::ostream& out, const std::vector<Trace>& traces);

struct Kinematics {
    RoadPosition pos;
    double speed = 0.0;
    double lateral_distance = 0.0;
};

/// Interpolated, map-matched state at time t.
Kinematics kinematics_from_trace(const Trace& trace, const RoadGraph& graph, double t);

/// Status-report policy: report when the UE has moved more than the distance
/// threshold, reversed on the same segment, or changed speed by more than the
/// speed threshold. A report refreshes `ue.reported`.
bool should_report(UeState& ue, const RoadGraph& graph, const ReportThresholds& thresholds);

}  // namespace msmf
