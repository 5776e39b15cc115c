#pragma once

// Fixtures and brute-force oracles shared by the test binaries.

#include "msmf/migration.hpp"
#include "msmf/prediction.hpp"
#include "msmf/roadnet.hpp"
#include "msmf/rng.hpp"
#include "msmf/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace testkit {

using namespace msmf;

/// Connected random graph: a random spanning tree plus extra chords, each
/// segment a polyline with up to two interior bends. Segment ids are sparse
/// and not in insertion order.
inline RoadGraph random_graph(std::uint64_t seed, int n_segments, double extent) {
    Rng rng(seed);
    const int n_nodes = std::max(2, n_segments * 2 / 3);
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < n_nodes; ++i)
        nodes.push_back({100 + 3 * i, {rng.uniform(0.0, extent), rng.uniform(0.0, extent)}});
    std::vector<SegmentSpec> segs;
    auto add = [&](std::size_t a, std::size_t b) {
        SegmentSpec s;
        s.id = static_cast<SegmentId>(7 * (n_segments - static_cast<int>(segs.size())) + 5);
        s.from = nodes[a].id;
        s.to = nodes[b].id;
        s.polyline.push_back(nodes[a].pos);
        const int bends = static_cast<int>(rng.index(3));
        for (int k = 1; k <= bends; ++k) {
            const double f = static_cast<double>(k) / (bends + 1);
            const Point mid = nodes[a].pos + (nodes[b].pos - nodes[a].pos) * f;
            s.polyline.push_back({mid.x + rng.uniform(-40.0, 40.0), mid.y + rng.uniform(-40.0, 40.0)});
        }
        s.polyline.push_back(nodes[b].pos);
        segs.push_back(std::move(s));
    };
    for (int i = 1; i < n_nodes; ++i) add(rng.index(static_cast<std::size_t>(i)), static_cast<std::size_t>(i));
    while (static_cast<int>(segs.size()) < n_segments) {
        const std::size_t a = rng.index(nodes.size());
        const std::size_t b = rng.index(nodes.size());
        if (a != b) add(a, b);
    }
    return RoadGraph(std::move(nodes), std::move(segs));
}

/// Exhaustive nearest projection over every polyline piece of every segment.
/// Ties go to the lower segment id, then the lower offset.
inline MatchResult brute_match(const RoadGraph& graph, Point p) {
    MatchResult best{0, 0.0, std::numeric_limits<double>::infinity()};
    for (const auto& seg : graph.segments()) {
        for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) {
            const Point a = seg.polyline[i], b = seg.polyline[i + 1];
            const double len = distance(a, b);
            const double ux = (b.x - a.x), uy = (b.y - a.y);
            double t = ((p.x - a.x) * ux + (p.y - a.y) * uy) / (ux * ux + uy * uy);
            Point q;
            double off;
            if (t <= 0.0) {
                q = a;
                off = seg.cumulative[i];
            } else if (t >= 1.0) {
                q = b;
                off = seg.cumulative[i + 1];
            } else {
                q = {a.x + ux * t, a.y + uy * t};
                off = seg.cumulative[i] + t * len;
            }
            const double d = std::hypot(p.x - q.x, p.y - q.y);
            const bool better = d < best.lateral_distance ||
                                (d == best.lateral_distance &&
                                 (seg.id < best.segment || (seg.id == best.segment && off < best.offset)));
            if (better) best = {seg.id, off, d};
        }
    }
    return best;
}

/// Nearest station by exhaustive scan, lowest id on ties.
inline StationId brute_cell(std::span<const BaseStation> stations, Point p) {
    StationId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& s : stations) {
        const double d = (p.x - s.center.x) * (p.x - s.center.x) + (p.y - s.center.y) * (p.y - s.center.y);
        if (d < best_d || (d == best_d && s.id < best)) {
            best = s.id;
            best_d = d;
        }
    }
    return best;
}

struct Fixture {
    RoadGraph graph;
    Topology topology;
    MrMap mr;
};

inline Fixture make_fixture(RoadGraph graph, double separation = 500.0, int cluster_cols = 3, int cluster_rows = 3,
                            const TierParams& params = {}) {
    auto stations = build_hex_lattice(graph.bbox().expanded(separation), separation);
    auto servers = build_tiers(stations, cluster_cols, cluster_rows, params);
    Topology topo(std::move(stations), std::move(servers));
    MrMap mr = build_mr_map(graph, topo);
    return {std::move(graph), std::move(topo), std::move(mr)};
}

/// 1400 m straight segment through stations A, B, C (ids 0, 1, 2) at offsets
/// 200, 700 and 1200; one Regional server (id 3) over all three.
inline Fixture make_abc(const TierParams& params = {}) {
    RoadGraph graph = make_straight_graph({-200.0, 0.0}, {1200.0, 0.0});
    std::vector<BaseStation> stations{{0, {0.0, 0.0}, 0, 0}, {1, {500.0, 0.0}, 1, 0}, {2, {1000.0, 0.0}, 2, 0}};
    auto servers = build_tiers(stations, 3, 1, params);
    Topology topo(std::move(stations), std::move(servers));
    MrMap mr = build_mr_map(graph, topo);
    return {std::move(graph), std::move(topo), std::move(mr)};
}

/// Branch-free chain of `n` segments joined at degree-2 nodes, with random
/// bends and random segment orientation.
struct Chain {
    RoadGraph graph;
    std::vector<SegmentId> order;
    /// True when order[k] runs from chain index k to k+1 (from -> to).
    std::vector<bool> forward;
};

inline Chain random_chain(std::uint64_t seed, int n) {
    Rng rng(seed);
    std::vector<NodeSpec> nodes;
    std::vector<SegmentSpec> segs;
    std::vector<SegmentId> order;
    std::vector<bool> forward;
    Point at{rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)};
    double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    nodes.push_back({0, at});
    for (int k = 0; k < n; ++k) {
        std::vector<Point> pts{at};
        const int pieces = 1 + static_cast<int>(rng.index(3));
        for (int j = 0; j < pieces; ++j) {
            dir += rng.uniform(-0.6, 0.6);
            const double len = rng.uniform(60.0, 400.0);
            at = {at.x + len * std::cos(dir), at.y + len * std::sin(dir)};
            pts.push_back(at);
        }
        nodes.push_back({k + 1, at});
        const bool fwd = rng.bernoulli(0.5);
        SegmentSpec s;
        s.id = 1000 + 13 * k;
        s.from = fwd ? k : k + 1;
        s.to = fwd ? k + 1 : k;
        if (!fwd) std::reverse(pts.begin(), pts.end());
        s.polyline = std::move(pts);
        order.push_back(s.id);
        forward.push_back(fwd);
        segs.push_back(std::move(s));
    }
    return {RoadGraph(std::move(nodes), std::move(segs)), std::move(order), std::move(forward)};
}

struct Run {
    ServerId server;
    double entry;
};

// Server sequence met by walking the chain from `start_s` in direction `dir`
// and looking up the interval every `step` meters.
inline std::vector<Run> sampled_runs(const testkit::Chain& c, const MrMap& mr, Tier tier, double start_s, int dir,
                              double step) {
    std::vector<double> cum{0.0};
    for (auto id : c.order) cum.push_back(cum.back() + c.graph.segment(id).length());
    const double end_s = dir > 0 ? cum.back() : 0.0;
    auto lookup = [&](double s) {
        std::size_t k = 0;
        if (dir > 0) {
            while (k + 1 < c.order.size() && s >= cum[k + 1]) ++k;
        } else {
            while (k + 1 < c.order.size() && s > cum[k + 1]) ++k;
        }
        const auto& seg = c.graph.segment(c.order[k]);
        const double u = std::clamp(s - cum[k], 0.0, seg.length());
        const bool fwd = c.forward[k];
        const double off = fwd ? u : seg.length() - u;
        const Heading h = (fwd == (dir > 0)) ? Heading::Forward : Heading::Backward;
        return mr.intervals(seg.id, tier)[mr.locate(seg.id, tier, off, h)].server;
    };
    std::vector<Run> runs;
    const double total = std::abs(end_s - start_s);
    for (double d = 0.0;; d += step) {
        const double dd = std::min(d, total);
        const ServerId s = lookup(start_s + dir * dd);
        if (runs.empty() || runs.back().server != s) runs.push_back({s, dd});
        if (dd >= total) break;
    }
    return runs;
}

inline RoadPosition chain_position(const testkit::Chain& c, double s, int dir) {
    double acc = 0.0;
    for (std::size_t k = 0; k < c.order.size(); ++k) {
        const auto& seg = c.graph.segment(c.order[k]);
        if (s <= acc + seg.length() || k + 1 == c.order.size()) {
            const double u = s - acc;
            const bool fwd = c.forward[k];
            return {seg.id, fwd ? u : seg.length() - u, (fwd == (dir > 0)) ? Heading::Forward : Heading::Backward};
        }
        acc += seg.length();
    }
    return {};
}

/// Session driven to completion: begin at 0, handoff at `t_handoff`.
inline MigrationSession completed_session(const ContainerSpec& spec, double bandwidth, std::int64_t threshold,
                                          double t_handoff) {
    MigrationSession s(1, 2, spec, bandwidth, threshold);
    s.begin(0.0);
    s.handoff(t_handoff);
    return s;
}

}  // namespace testkit
