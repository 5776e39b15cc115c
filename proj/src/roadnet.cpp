#include "msmf/roadnet.hpp"

#include "msmf/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace msmf {

namespace {

constexpr double kEndpointTolerance = 1e-6;

bool better_match(const MatchResult& a, const MatchResult& b) {
    if (a.lateral_distance != b.lateral_distance) return a.lateral_distance < b.lateral_distance;
    if (a.segment != b.segment) return a.segment < b.segment;
    return a.offset < b.offset;
}

MatchResult project_piece(const RoadSegment& seg, std::size_t i, Point p) {
    const Point a = seg.polyline[i];
    const Point b = seg.polyline[i + 1];
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const Point q = t >= 1.0 ? b : a + ab * t;
    const double piece_len = seg.cumulative[i + 1] - seg.cumulative[i];
    return {seg.id, t >= 1.0 ? seg.cumulative[i + 1] : seg.cumulative[i] + t * piece_len, distance(p, q)};
}

}  // namespace

RoadGraph::RoadGraph(std::vector<NodeSpec> nodes, std::vector<SegmentSpec> segments) {
    nodes_.reserve(nodes.size());
    for (const auto& n : nodes) {
        if (!std::isfinite(n.pos.x) || !std::isfinite(n.pos.y))
            throw InvalidGraph("node " + std::to_string(n.id) + " has non-finite coordinates");
        if (!node_index_.emplace(n.id, nodes_.size()).second)
            throw InvalidGraph("duplicate node id " + std::to_string(n.id));
        nodes_.push_back({n.id, n.pos});
    }

    segments_.reserve(segments.size());
    for (auto& s : segments) {
        if (!segment_index_.emplace(s.id, segments_.size()).second)
            throw InvalidGraph("duplicate segment id " + std::to_string(s.id));
        auto from = node_index_.find(s.from);
        auto to = node_index_.find(s.to);
        if (from == node_index_.end() || to == node_index_.end())
            throw InvalidGraph("segment " + std::to_string(s.id) + " references an unknown node");
        if (s.polyline.size() < 2)
            throw InvalidGraph("segment " + std::to_string(s.id) + " needs at least two polyline points");
        for (const auto& q : s.polyline) {
            if (!std::isfinite(q.x) || !std::isfinite(q.y))
                throw InvalidGraph("segment " + std::to_string(s.id) + " has non-finite coordinates");
        }
        const Point a = nodes_[from->second].pos;
        const Point b = nodes_[to->second].pos;
        if (distance(s.polyline.front(), a) > kEndpointTolerance ||
            distance(s.polyline.back(), b) > kEndpointTolerance)
            throw InvalidGraph("segment " + std::to_string(s.id) + " polyline does not start/end at its nodes");
        s.polyline.front() = a;
        s.polyline.back() = b;

        RoadSegment seg{s.id, s.from, s.to, std::move(s.polyline), {}};
        seg.cumulative.resize(seg.polyline.size());
        seg.cumulative[0] = 0.0;
        for (std::size_t i = 1; i < seg.polyline.size(); ++i)
            seg.cumulative[i] = seg.cumulative[i - 1] + distance(seg.polyline[i - 1], seg.polyline[i]);
        if (!(seg.length() > 0.0))
            throw InvalidGraph("segment " + std::to_string(seg.id) + " has zero length");

        incident_[seg.from].push_back(seg.id);
        if (seg.to != seg.from) incident_[seg.to].push_back(seg.id);
        segments_.push_back(std::move(seg));
    }
    for (auto& [_, list] : incident_) std::sort(list.begin(), list.end());

    // Connectivity over nodes; an isolated node also disconnects the graph.
    if (!nodes_.empty()) {
        std::unordered_set<NodeId> seen{nodes_.front().id};
        std::queue<NodeId> frontier;
        frontier.push(nodes_.front().id);
        while (!frontier.empty()) {
            const NodeId n = frontier.front();
            frontier.pop();
            auto it = incident_.find(n);
            if (it == incident_.end()) continue;
            for (SegmentId sid : it->second) {
                const auto& seg = segments_[segment_index_.at(sid)];
                for (NodeId m : {seg.from, seg.to}) {
                    if (seen.insert(m).second) frontier.push(m);
                }
            }
        }
        if (seen.size() != nodes_.size()) throw InvalidGraph("road graph is not connected");
    }

    if (!nodes_.empty()) {
        bbox_ = {nodes_.front().pos, nodes_.front().pos};
        auto extend = [this](Point q) {
            bbox_.min.x = std::min(bbox_.min.x, q.x);
            bbox_.min.y = std::min(bbox_.min.y, q.y);
            bbox_.max.x = std::max(bbox_.max.x, q.x);
            bbox_.max.y = std::max(bbox_.max.y, q.y);
        };
        for (const auto& n : nodes_) extend(n.pos);
        for (const auto& s : segments_)
            for (const auto& q : s.polyline) extend(q);
    }
    build_index();
}

void RoadGraph::build_index() {
    for (std::size_t s = 0; s < segments_.size(); ++s)
        for (std::size_t i = 0; i + 1 < segments_[s].polyline.size(); ++i) sub_edges_.push_back({s, i});
    if (sub_edges_.empty()) return;

    const double extent = std::max({bbox_.width(), bbox_.height(), 1.0});
    const double per_side = std::ceil(std::sqrt(static_cast<double>(sub_edges_.size())));
    cell_size_ = std::max(extent / per_side, 1.0);
    grid_nx_ = std::min<long>(static_cast<long>(bbox_.width() / cell_size_) + 1, 4096);
    grid_ny_ = std::min<long>(static_cast<long>(bbox_.height() / cell_size_) + 1, 4096);
    cell_size_ = std::max({cell_size_, bbox_.width() / static_cast<double>(grid_nx_),
                           bbox_.height() / static_cast<double>(grid_ny_)});
    grid_.assign(static_cast<std::size_t>(grid_nx_ * grid_ny_), {});

    auto cell_x = [this](double x) {
        return std::clamp(static_cast<long>(std::floor((x - bbox_.min.x) / cell_size_)), 0L, grid_nx_ - 1);
    };
    auto cell_y = [this](double y) {
        return std::clamp(static_cast<long>(std::floor((y - bbox_.min.y) / cell_size_)), 0L, grid_ny_ - 1);
    };
    for (std::size_t e = 0; e < sub_edges_.size(); ++e) {
        const auto& seg = segments_[sub_edges_[e].segment_index];
        const Point a = seg.polyline[sub_edges_[e].piece];
        const Point b = seg.polyline[sub_edges_[e].piece + 1];
        for (long j = cell_y(std::min(a.y, b.y)); j <= cell_y(std::max(a.y, b.y)); ++j)
            for (long i = cell_x(std::min(a.x, b.x)); i <= cell_x(std::max(a.x, b.x)); ++i)
                grid_[static_cast<std::size_t>(j * grid_nx_ + i)].push_back(static_cast<std::uint32_t>(e));
    }
}

const RoadSegment& RoadGraph::segment(SegmentId id) const {
    auto it = segment_index_.find(id);
    if (it == segment_index_.end()) throw UnknownSegment(id);
    return segments_[it->second];
}

const RoadNode& RoadGraph::node(NodeId id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw InvalidGraph("unknown node id " + std::to_string(id));
    return nodes_[it->second];
}

std::span<const SegmentId> RoadGraph::incident(NodeId node) const {
    auto it = incident_.find(node);
    if (it == incident_.end()) return {};
    return it->second;
}

Point RoadGraph::point_at(SegmentId id, double offset) const {
    const auto& seg = segment(id);
    offset = std::clamp(offset, 0.0, seg.length());
    auto it = std::upper_bound(seg.cumulative.begin(), seg.cumulative.end(), offset);
    std::size_t i = static_cast<std::size_t>(std::distance(seg.cumulative.begin(), it));
    i = std::clamp<std::size_t>(i, 1, seg.polyline.size() - 1) - 1;
    const double piece = seg.cumulative[i + 1] - seg.cumulative[i];
    const double t = piece > 0.0 ? (offset - seg.cumulative[i]) / piece : 0.0;
    return seg.polyline[i] + (seg.polyline[i + 1] - seg.polyline[i]) * t;
}

MatchResult RoadGraph::match(Point p) const {
    if (segments_.empty()) throw EmptyGraph();

    const long cx = std::clamp(static_cast<long>(std::floor((p.x - bbox_.min.x) / cell_size_)), 0L, grid_nx_ - 1);
    const long cy = std::clamp(static_cast<long>(std::floor((p.y - bbox_.min.y) / cell_size_)), 0L, grid_ny_ - 1);
    std::vector<char> seen(sub_edges_.size(), 0);
    MatchResult best{0, 0.0, std::numeric_limits<double>::infinity()};
    const long max_ring = std::max(grid_nx_, grid_ny_);

    for (long r = 0; r <= max_ring; ++r) {
        for (long j = cy - r; j <= cy + r; ++j) {
            if (j < 0 || j >= grid_ny_) continue;
            const bool edge_row = (j == cy - r || j == cy + r);
            for (long i = cx - r; i <= cx + r; i += (edge_row ? 1 : 2 * r)) {
                if (i >= 0 && i < grid_nx_) {
                    for (std::uint32_t e : grid_[static_cast<std::size_t>(j * grid_nx_ + i)]) {
                        if (seen[e]) continue;
                        seen[e] = 1;
                        const auto cand =
                            project_piece(segments_[sub_edges_[e].segment_index], sub_edges_[e].piece, p);
                        if (better_match(cand, best)) best = cand;
                    }
                }
                if (r == 0) break;
            }
        }
        // Anything unexamined lies outside the square of rings 0..r.
        const double xlo = bbox_.min.x + static_cast<double>(cx - r) * cell_size_;
        const double xhi = bbox_.min.x + static_cast<double>(cx + r + 1) * cell_size_;
        const double ylo = bbox_.min.y + static_cast<double>(cy - r) * cell_size_;
        const double yhi = bbox_.min.y + static_cast<double>(cy + r + 1) * cell_size_;
        const double bound = std::min({p.x - xlo, xhi - p.x, p.y - ylo, yhi - p.y});
        if (best.lateral_distance < bound) break;
    }
    return best;
}

MatchResult project_onto_segment(const RoadSegment& seg, Point p) {
    MatchResult best{seg.id, 0.0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) {
        const auto cand = project_piece(seg, i, p);
        if (better_match(cand, best)) best = cand;
    }
    return best;
}

MatchResult match_road(const RoadGraph& graph, Point p) { return graph.match(p); }

Point project_geographic(double lat, double lon, GeoOrigin origin) {
    for (double v : {lat, origin.lat}) {
        if (!(std::abs(v) <= 90.0)) throw OutOfRange("latitude out of range: " + std::to_string(v));
    }
    for (double v : {lon, origin.lon}) {
        if (!(std::abs(v) <= 180.0)) throw OutOfRange("longitude out of range: " + std::to_string(v));
    }
    constexpr double k = std::numbers::pi / 180.0 * kEarthRadiusM;
    return {(lon - origin.lon) * std::cos(origin.lat * std::numbers::pi / 180.0) * k, (lat - origin.lat) * k};
}

GeoOrigin unproject_geographic(Point p, GeoOrigin origin) {
    constexpr double k = std::numbers::pi / 180.0 * kEarthRadiusM;
    const double c = std::cos(origin.lat * std::numbers::pi / 180.0);
    return {origin.lat + p.y / k, origin.lon + p.x / (c * k)};
}

double remaining_on_segment(const RoadGraph& graph, const RoadPosition& pos) {
    const auto& seg = graph.segment(pos.segment);
    return pos.heading == Heading::Forward ? seg.length() - pos.offset : pos.offset;
}

RoadPosition continue_at_node(const RoadGraph& graph, SegmentId arrival, Heading heading, Rng& rng) {
    const auto& seg = graph.segment(arrival);
    const NodeId node = seg.end_node(heading);
    std::vector<SegmentId> options;
    for (SegmentId s : graph.incident(node))
        if (s != arrival) options.push_back(s);
    if (options.empty()) {
        // Dead end: turn around on the same segment.
        return {arrival, heading == Heading::Forward ? seg.length() : 0.0, reversed(heading)};
    }
    const auto& next = graph.segment(options[rng.index(options.size())]);
    if (next.from == node) return {next.id, 0.0, Heading::Forward};
    return {next.id, next.length(), Heading::Backward};
}

RoadPosition advance(const RoadGraph& graph, RoadPosition pos, double distance, Rng& rng) {
    if (!(distance >= 0.0)) throw OutOfRange("advance distance must be non-negative");
    double left = distance;
    while (true) {
        const auto& seg = graph.segment(pos.segment);
        const double room = remaining_on_segment(graph, pos);
        if (left <= room) {
            pos.offset += pos.heading == Heading::Forward ? left : -left;
            pos.offset = std::clamp(pos.offset, 0.0, seg.length());
            return pos;
        }
        left -= room;
        pos = continue_at_node(graph, pos.segment, pos.heading, rng);
    }
}

RoadGraph parse_road_graph(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidGraph(std::string("road graph is not valid JSON: ") + e.what());
    }
    std::vector<NodeSpec> nodes;
    std::vector<SegmentSpec> segments;
    try {
        for (const auto& n : doc.at("nodes"))
            nodes.push_back({n.at("id").get<NodeId>(), {n.at("x").get<double>(), n.at("y").get<double>()}});
        for (const auto& s : doc.at("segments")) {
            SegmentSpec spec{s.at("id").get<SegmentId>(), s.at("from").get<NodeId>(), s.at("to").get<NodeId>(), {}};
            for (const auto& q : s.at("polyline")) {
                if (!q.is_array() || q.size() != 2) throw InvalidGraph("polyline points must be [x, y] pairs");
                spec.polyline.push_back({q[0].get<double>(), q[1].get<double>()});
            }
            segments.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidGraph(std::string("malformed road graph: ") + e.what());
    }
    return RoadGraph(std::move(nodes), std::move(segments));
}

std::string serialize_road_graph(const RoadGraph& graph) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : graph.nodes()) doc["nodes"].push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}});
    doc["segments"] = nlohmann::ordered_json::array();
    for (const auto& s : graph.segments()) {
        nlohmann::ordered_json poly = nlohmann::ordered_json::array();
        for (const auto& q : s.polyline) poly.push_back({q.x, q.y});
        doc["segments"].push_back({{"id", s.id}, {"from", s.from}, {"to", s.to}, {"polyline", poly}});
    }
    return doc.dump(1);
}

RoadGraph load_road_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open road graph " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_road_graph(buf.str());
}

void save_road_graph(const RoadGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write road graph " + path.string());
    out << serialize_road_graph(graph) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

RoadGraph make_grid_graph(int rows, int cols, double separation) {
    if (rows < 1 || cols < 1) throw InvalidDims("grid needs rows >= 1 and cols >= 1");
    if (!(separation > 0.0)) throw InvalidDims("grid separation must be positive");
    const auto node_id = [cols](int i, int j) { return static_cast<NodeId>(j) * (cols + 1) + i; };
    std::vector<NodeSpec> nodes;
    for (int j = 0; j <= rows; ++j)
        for (int i = 0; i <= cols; ++i) nodes.push_back({node_id(i, j), {i * separation, j * separation}});
    std::vector<SegmentSpec> segs;
    SegmentId next = 0;
    for (int j = 0; j <= rows; ++j)
        for (int i = 0; i < cols; ++i)
            segs.push_back({next++, node_id(i, j), node_id(i + 1, j),
                            {{i * separation, j * separation}, {(i + 1) * separation, j * separation}}});
    for (int i = 0; i <= cols; ++i)
        for (int j = 0; j < rows; ++j)
            segs.push_back({next++, node_id(i, j), node_id(i, j + 1),
                            {{i * separation, j * separation}, {i * separation, (j + 1) * separation}}});
    return RoadGraph(std::move(nodes), std::move(segs));
}

RoadGraph make_straight_graph(Point a, Point b) {
    return RoadGraph({{0, a}, {1, b}}, {{0, 0, 1, {a, b}}});
}

}  // namespace msmf
