#pragma once

// Planar road network, map matching and along-road motion.

#include "msmf/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace msmf {

/// Planar coordinates in meters (x east, y north).
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(Point a, double s) noexcept { return {a.x * s, a.y * s}; }
    friend bool operator==(Point a, Point b) noexcept = default;
};

inline double dot(Point a, Point b) noexcept { return a.x * b.x + a.y * b.y; }
inline double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

struct BoundingBox {
    Point min;
    Point max;

    double width() const noexcept { return max.x - min.x; }
    double height() const noexcept { return max.y - min.y; }
    BoundingBox expanded(double margin) const noexcept {
        return {{min.x - margin, min.y - margin}, {max.x + margin, max.y + margin}};
    }
};

using NodeId = std::int64_t;
using SegmentId = std::int64_t;

enum class Heading : std::uint8_t { Forward, Backward };

constexpr Heading reversed(Heading h) noexcept {
    return h == Heading::Forward ? Heading::Backward : Heading::Forward;
}

struct RoadNode {
    NodeId id = 0;
    Point pos;
};

struct RoadSegment {
    SegmentId id = 0;
    NodeId from = 0;
    NodeId to = 0;
    std::vector<Point> polyline;
    /// cumulative[i] is the along-segment offset of polyline[i].
    std::vector<double> cumulative;

    double length() const noexcept { return cumulative.back(); }
    NodeId end_node(Heading h) const noexcept { return h == Heading::Forward ? to : from; }
};

/// Where a vehicle is on the network. Offset is measured from the segment's
/// from-node; heading says which end it is moving toward.
struct RoadPosition {
    SegmentId segment = 0;
    double offset = 0.0;
    Heading heading = Heading::Forward;

    friend bool operator==(const RoadPosition&, const RoadPosition&) = default;
};

struct MatchResult {
    SegmentId segment = 0;
    double offset = 0.0;
    double lateral_distance = 0.0;
};

struct NodeSpec {
    NodeId id = 0;
    Point pos;
};

struct SegmentSpec {
    SegmentId id = 0;
    NodeId from = 0;
    NodeId to = 0;
    std::vector<Point> polyline;
};

/// Immutable, validated road network with a spatial index for matching.
///
/// Construction rejects duplicate ids, dangling node references, polylines
/// whose endpoints do not coincide with their nodes, and disconnected graphs.
class RoadGraph {
public:
    RoadGraph(std::vector<NodeSpec> nodes, std::vector<SegmentSpec> segments);

    std::span<const RoadNode> nodes() const noexcept { return nodes_; }
    std::span<const RoadSegment> segments() const noexcept { return segments_; }

    const RoadSegment& segment(SegmentId id) const;
    const RoadNode& node(NodeId id) const;
    bool has_segment(SegmentId id) const noexcept { return segment_index_.contains(id); }

    /// Segments touching `node`, sorted by id, each listed once.
    std::span<const SegmentId> incident(NodeId node) const;

    Point point_at(SegmentId id, double offset) const;
    BoundingBox bbox() const noexcept { return bbox_; }

    MatchResult match(Point p) const;

private:
    struct SubEdge {
        std::size_t segment_index;
        std::size_t piece;
    };

    void build_index();

    std::vector<RoadNode> nodes_;
    std::vector<RoadSegment> segments_;
    std::unordered_map<NodeId, std::size_t> node_index_;
    std::unordered_map<SegmentId, std::size_t> segment_index_;
    std::unordered_map<NodeId, std::vector<SegmentId>> incident_;
    BoundingBox bbox_;

    std::vector<SubEdge> sub_edges_;
    double cell_size_ = 1.0;
    long grid_nx_ = 1;
    long grid_ny_ = 1;
    std::vector<std::vector<std::uint32_t>> grid_;
};

/// Closest point on any polyline; ties go to the lowest segment id, then the
/// smallest offset. Throws EmptyGraph when there is nothing to match against.
MatchResult match_road(const RoadGraph& graph, Point p);

/// Closest point on one polyline; used by matching and by tests.
MatchResult project_onto_segment(const RoadSegment& seg, Point p);

struct GeoOrigin {
    double lat = 0.0;
    double lon = 0.0;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Equirectangular projection about `origin`.
Point project_geographic(double lat, double lon, GeoOrigin origin);

/// Inverse of project_geographic; returns {lat, lon}.
GeoOrigin unproject_geographic(Point p, GeoOrigin origin);

/// Picks the segment a vehicle takes when it reaches the end of `arrival`
/// travelling in `heading`: uniform over other incident segments, or the same
/// segment reversed at a dead end. The result sits at the start of the new
/// segment in its direction of travel.
RoadPosition continue_at_node(const RoadGraph& graph, SegmentId arrival, Heading heading, Rng& rng);

/// Moves `distance` meters along the network. Arriving exactly at a node
/// leaves the position at the segment end without drawing a turn.
RoadPosition advance(const RoadGraph& graph, RoadPosition pos, double distance, Rng& rng);

/// Distance left to the end of the current segment in the heading direction.
double remaining_on_segment(const RoadGraph& graph, const RoadPosition& pos);

// Road-graph document: {"nodes": [{"id","x","y"}], "segments": [{"id","from","to","polyline": [[x,y],...]}]}.
RoadGraph parse_road_graph(std::string_view text);
std::string serialize_road_graph(const RoadGraph& graph);
RoadGraph load_road_graph(const std::filesystem::path& path);
void save_road_graph(const RoadGraph& graph, const std::filesystem::path& path);

/// Street grid of rows x cols blocks with `separation` meter edges, lower-left at the origin.
RoadGraph make_grid_graph(int rows, int cols, double separation);

/// Single straight segment from `a` to `b`.
RoadGraph make_straight_graph(Point a, Point b);

}  // namespace msmf
