#pragma once

// Base-station lattice, two-tier MEC servers, and the road-to-server
// coverage map.

#include "msmf/roadnet.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace msmf {

using StationId = std::int64_t;
using ServerId = std::int64_t;

inline constexpr ServerId kNoServer = -1;

struct BaseStation {
    StationId id = 0;
    Point center;
    /// Lattice indices: row j, column i (odd rows shifted by half a separation).
    int lattice_i = 0;
    int lattice_j = 0;
};

enum class Tier : std::uint8_t { Local, Regional };

const char* to_string(Tier tier) noexcept;

struct MecServer {
    ServerId id = 0;
    Tier tier = Tier::Local;
    std::vector<StationId> attached_stations;
    double ue_latency_s = 0.0;
    double processing_delay_s = 0.0;
    double peer_bandwidth_Bps = 0.0;
    std::int64_t storage_capacity_bytes = 0;
};

struct TierParams {
    double d_local_s = 0.010;
    double d_regional_s = 0.050;
    double d_p_s = 0.010;
    double bandwidth_Bps = 12.5e6;
    std::int64_t storage_capacity_bytes = 1'000'000'000'000;
};

struct CoverageInterval {
    ServerId server = kNoServer;
    SegmentId segment = 0;
    double start_offset = 0.0;
    double end_offset = 0.0;

    /// Dis_j: length of road this server covers on the segment.
    double width() const noexcept { return end_offset - start_offset; }
};

/// Hexagonal lattice points inside `bbox`: row j at y = j*s*sqrt(3)/2,
/// x = i*s + (j mod 2)*s/2. Ids are assigned in (j, i) order.
std::vector<BaseStation> build_hex_lattice(const BoundingBox& bbox, double separation);

/// Nearest station, lowest id on ties.
StationId assign_cell(std::span<const BaseStation> stations, Point p);

/// One Local server per station (server id == station id) plus Regional
/// servers over cluster_cols x cluster_rows blocks of the lattice index grid.
/// A block left with a single station joins the block of that station's
/// nearest neighbour.
std::vector<MecServer> build_tiers(std::span<const BaseStation> stations, int cluster_cols, int cluster_rows,
                                   const TierParams& params);

/// Stations plus servers, with station -> server lookups per tier.
class Topology {
public:
    Topology(std::vector<BaseStation> stations, std::vector<MecServer> servers);

    std::span<const BaseStation> stations() const noexcept { return stations_; }
    std::span<const MecServer> servers() const noexcept { return servers_; }
    const MecServer& server(ServerId id) const;
    ServerId server_for_station(StationId station, Tier tier) const;
    double ue_latency(Tier tier) const;

private:
    std::vector<BaseStation> stations_;
    std::vector<MecServer> servers_;
    std::vector<ServerId> local_of_station_;
    std::vector<ServerId> regional_of_station_;
    std::map<Tier, double> tier_latency_;
};

/// MR_map: per (segment, tier), coverage intervals ordered by offset that
/// partition [0, length].
class MrMap {
public:
    void set(SegmentId segment, Tier tier, std::vector<CoverageInterval> intervals);

    bool contains(SegmentId segment) const noexcept;
    std::span<const CoverageInterval> intervals(SegmentId segment, Tier tier) const;

    /// Index of the interval holding `offset`; at an interior boundary the
    /// interval ahead in `heading` wins.
    std::size_t locate(SegmentId segment, Tier tier, double offset, Heading heading) const;

    const std::map<std::pair<SegmentId, Tier>, std::vector<CoverageInterval>>& all() const noexcept {
        return table_;
    }

private:
    std::map<std::pair<SegmentId, Tier>, std::vector<CoverageInterval>> table_;
};

/// Intervals narrower than this are folded into the wider neighbour.
inline constexpr double kMinIntervalWidth = 0.01;

/// Builds the coverage map. Station ownership along each straight polyline
/// piece is the lower envelope of the (linear in t) squared-distance
/// differences, so boundaries are exact rather than sampled.
MrMap build_mr_map(const RoadGraph& graph, const Topology& topology);

std::span<const CoverageInterval> list_servers_on_road(const MrMap& mr, SegmentId segment, Tier tier);

/// Text table "segment tier server start end", one interval per line.
std::string format_mr_map(const MrMap& mr);

}  // namespace msmf
