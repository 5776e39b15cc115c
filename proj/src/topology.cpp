#include "msmf/topology.hpp"

#include "msmf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace msmf {

namespace {

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

struct Piece {
    StationId station;
    double start;
    double end;
};

// Station ownership of the straight piece a->b, as (station, t0, t1) runs.
void envelope_along(Point a, Point b, std::span<const BaseStation> stations, double base, double len,
                    std::vector<Piece>& out) {
    const Point d = b - a;
    const std::size_t n = stations.size();
    std::vector<double> alpha(n), beta(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point ac = a - stations[k].center;
        alpha[k] = dot(ac, ac);
        beta[k] = 2.0 * dot(ac, d);
    }
    auto owner_after = [&](std::size_t x, std::size_t y) {
        if (alpha[x] != alpha[y]) return alpha[x] < alpha[y];
        if (beta[x] != beta[y]) return beta[x] < beta[y];
        return stations[x].id < stations[y].id;
    };
    std::size_t cur = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (owner_after(k, cur)) cur = k;

    double t = 0.0;
    while (true) {
        double t_next = std::numeric_limits<double>::infinity();
        std::size_t next = cur;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == cur || !(beta[j] < beta[cur])) continue;
            double tj = (alpha[j] - alpha[cur]) / (beta[cur] - beta[j]);
            tj = std::max(tj, t);
            if (tj < t_next || (tj == t_next && (beta[j] < beta[next] ||
                                                 (beta[j] == beta[next] && stations[j].id < stations[next].id)))) {
                t_next = tj;
                next = j;
            }
        }
        const double t_end = std::min(t_next, 1.0);
        if (t_end > t) {
            const double s0 = base + t * len;
            const double s1 = base + t_end * len;
            if (!out.empty() && out.back().station == stations[cur].id)
                out.back().end = s1;
            else
                out.push_back({stations[cur].id, s0, s1});
        }
        if (t_next >= 1.0) break;
        t = t_next;
        cur = next;
    }
}

std::vector<CoverageInterval> coalesce(std::vector<CoverageInterval> in) {
    std::vector<CoverageInterval> out;
    for (auto& iv : in) {
        if (!out.empty() && out.back().server == iv.server)
            out.back().end_offset = iv.end_offset;
        else
            out.push_back(iv);
    }
    return out;
}

std::vector<CoverageInterval> drop_slivers(std::vector<CoverageInterval> ivs) {
    ivs = coalesce(std::move(ivs));
    bool changed = true;
    while (changed && ivs.size() > 1) {
        changed = false;
        for (std::size_t k = 0; k < ivs.size(); ++k) {
            if (ivs[k].width() >= kMinIntervalWidth) continue;
            const bool has_prev = k > 0;
            const bool has_next = k + 1 < ivs.size();
            const bool into_prev =
                has_prev && (!has_next || ivs[k - 1].width() >= ivs[k + 1].width());
            if (into_prev)
                ivs[k - 1].end_offset = ivs[k].end_offset;
            else
                ivs[k + 1].start_offset = ivs[k].start_offset;
            ivs.erase(ivs.begin() + static_cast<std::ptrdiff_t>(k));
            ivs = coalesce(std::move(ivs));
            changed = true;
            break;
        }
    }
    return ivs;
}

}  // namespace

const char* to_string(Tier tier) noexcept { return tier == Tier::Local ? "local" : "regional"; }

std::vector<BaseStation> build_hex_lattice(const BoundingBox& bbox, double separation) {
    if (!(separation > 0.0)) throw Degenerate("lattice separation must be positive");
    if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) throw Degenerate("lattice bounding box has zero area");
    const double row_h = separation * std::sqrt(3.0) / 2.0;
    std::vector<BaseStation> out;
    const long j0 = static_cast<long>(std::ceil(bbox.min.y / row_h));
    const long j1 = static_cast<long>(std::floor(bbox.max.y / row_h));
    for (long j = j0; j <= j1; ++j) {
        const double shift = (floor_div(j, 2) * 2 != j) ? separation / 2.0 : 0.0;
        const long i0 = static_cast<long>(std::ceil((bbox.min.x - shift) / separation));
        const long i1 = static_cast<long>(std::floor((bbox.max.x - shift) / separation));
        for (long i = i0; i <= i1; ++i) {
            out.push_back({static_cast<StationId>(out.size()),
                           {static_cast<double>(i) * separation + shift, static_cast<double>(j) * row_h},
                           static_cast<int>(i),
                           static_cast<int>(j)});
        }
    }
    return out;
}

StationId assign_cell(std::span<const BaseStation> stations, Point p) {
    if (stations.empty()) throw Degenerate("no base stations");
    const BaseStation* best = &stations.front();
    double best_d = distance(p, best->center);
    for (const auto& s : stations.subspan(1)) {
        const double d = distance(p, s.center);
        if (d < best_d || (d == best_d && s.id < best->id)) {
            best = &s;
            best_d = d;
        }
    }
    return best->id;
}

std::vector<MecServer> build_tiers(std::span<const BaseStation> stations, int cluster_cols, int cluster_rows,
                                   const TierParams& params) {
    if (cluster_cols < 1 || cluster_rows < 1) throw InvalidCluster("cluster dimensions must be >= 1");
    if (cluster_cols * cluster_rows == 1)
        throw InvalidCluster("1x1 clustering gives single-station regional servers");
    if (!(params.bandwidth_Bps > 0.0)) throw InvalidCluster("peer bandwidth must be positive");

    std::vector<MecServer> servers;
    for (const auto& s : stations) {
        if (s.id != static_cast<StationId>(servers.size()))
            throw InvalidCluster("station ids must be dense and ordered");
        servers.push_back({s.id, Tier::Local, {s.id}, params.d_local_s, params.d_p_s, params.bandwidth_Bps,
                           params.storage_capacity_bytes});
    }

    std::map<std::pair<long, long>, std::vector<StationId>> blocks;
    std::vector<std::pair<long, long>> block_of(stations.size());
    for (const auto& s : stations) {
        const std::pair<long, long> key{floor_div(s.lattice_j, cluster_rows), floor_div(s.lattice_i, cluster_cols)};
        blocks[key].push_back(s.id);
        block_of[static_cast<std::size_t>(s.id)] = key;
    }
    // Fold singleton blocks into the block of the nearest station outside them.
    for (auto& [key, members] : blocks) {
        if (members.size() != 1) continue;
        const auto& lone = stations[static_cast<std::size_t>(members.front())];
        const BaseStation* nearest = nullptr;
        for (const auto& s : stations) {
            if (s.id == lone.id || blocks[block_of[static_cast<std::size_t>(s.id)]].empty()) continue;
            if (!nearest || distance(s.center, lone.center) < distance(nearest->center, lone.center))
                nearest = &s;
        }
        if (!nearest) throw InvalidCluster("not enough stations to form a regional server");
        const auto target = block_of[static_cast<std::size_t>(nearest->id)];
        blocks[target].push_back(lone.id);
        block_of[static_cast<std::size_t>(lone.id)] = target;
        members.clear();
    }
    for (auto& [key, members] : blocks) {
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());
        servers.push_back({static_cast<ServerId>(servers.size()), Tier::Regional, members, params.d_regional_s,
                           params.d_p_s, params.bandwidth_Bps, params.storage_capacity_bytes});
    }
    if (servers.size() == stations.size()) throw InvalidCluster("no regional server could be formed");
    return servers;
}

Topology::Topology(std::vector<BaseStation> stations, std::vector<MecServer> servers)
    : stations_(std::move(stations)), servers_(std::move(servers)) {
    local_of_station_.assign(stations_.size(), kNoServer);
    regional_of_station_.assign(stations_.size(), kNoServer);
    for (std::size_t k = 0; k < servers_.size(); ++k) {
        const auto& srv = servers_[k];
        if (srv.id != static_cast<ServerId>(k)) throw InvalidCluster("server ids must be dense and ordered");
        if (srv.tier == Tier::Local && srv.attached_stations.size() != 1)
            throw InvalidCluster("local server must attach exactly one station");
        if (srv.tier == Tier::Regional && srv.attached_stations.size() < 2)
            throw InvalidCluster("regional server must attach at least two stations");
        auto& slot = srv.tier == Tier::Local ? local_of_station_ : regional_of_station_;
        for (StationId st : srv.attached_stations) slot.at(static_cast<std::size_t>(st)) = srv.id;
        tier_latency_[srv.tier] = srv.ue_latency_s;
    }
}

const MecServer& Topology::server(ServerId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= servers_.size())
        throw OutOfRange("unknown server id " + std::to_string(id));
    return servers_[static_cast<std::size_t>(id)];
}

ServerId Topology::server_for_station(StationId station, Tier tier) const {
    const auto& slot = tier == Tier::Local ? local_of_station_ : regional_of_station_;
    return slot.at(static_cast<std::size_t>(station));
}

double Topology::ue_latency(Tier tier) const {
    auto it = tier_latency_.find(tier);
    if (it == tier_latency_.end()) throw OutOfRange(std::string("no servers on tier ") + to_string(tier));
    return it->second;
}

void MrMap::set(SegmentId segment, Tier tier, std::vector<CoverageInterval> intervals) {
    table_[{segment, tier}] = std::move(intervals);
}

bool MrMap::contains(SegmentId segment) const noexcept {
    return table_.contains({segment, Tier::Local}) || table_.contains({segment, Tier::Regional});
}

std::span<const CoverageInterval> MrMap::intervals(SegmentId segment, Tier tier) const {
    auto it = table_.find({segment, tier});
    if (it == table_.end()) throw UnknownSegment(segment);
    return it->second;
}

std::size_t MrMap::locate(SegmentId segment, Tier tier, double offset, Heading heading) const {
    const auto ivs = intervals(segment, tier);
    if (heading == Heading::Forward) {
        auto it = std::upper_bound(ivs.begin(), ivs.end(), offset,
                                   [](double o, const CoverageInterval& iv) { return o < iv.end_offset; });
        if (it == ivs.end()) return ivs.size() - 1;
        return static_cast<std::size_t>(std::distance(ivs.begin(), it));
    }
    auto it = std::lower_bound(ivs.begin(), ivs.end(), offset,
                               [](const CoverageInterval& iv, double o) { return iv.start_offset < o; });
    if (it == ivs.begin()) return 0;
    return static_cast<std::size_t>(std::distance(ivs.begin(), it)) - 1;
}

MrMap build_mr_map(const RoadGraph& graph, const Topology& topology) {
    MrMap mr;
    const auto stations = topology.stations();
    if (stations.empty()) throw Degenerate("no base stations");
    for (const auto& seg : graph.segments()) {
        std::vector<Piece> pieces;
        for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) {
            const double len = seg.cumulative[i + 1] - seg.cumulative[i];
            if (len <= 0.0) continue;
            envelope_along(seg.polyline[i], seg.polyline[i + 1], stations, seg.cumulative[i], len, pieces);
        }
        std::vector<CoverageInterval> local;
        for (const auto& p : pieces)
            local.push_back({topology.server_for_station(p.station, Tier::Local), seg.id, p.start, p.end});
        local.front().start_offset = 0.0;
        local.back().end_offset = seg.length();
        local = drop_slivers(std::move(local));

        std::vector<CoverageInterval> regional;
        for (const auto& iv : local) {
            const StationId st = topology.server(iv.server).attached_stations.front();
            regional.push_back({topology.server_for_station(st, Tier::Regional), seg.id, iv.start_offset,
                                iv.end_offset});
        }
        mr.set(seg.id, Tier::Local, std::move(local));
        mr.set(seg.id, Tier::Regional, coalesce(std::move(regional)));
    }
    return mr;
}

std::span<const CoverageInterval> list_servers_on_road(const MrMap& mr, SegmentId segment, Tier tier) {
    return mr.intervals(segment, tier);
}

std::string format_mr_map(const MrMap& mr) {
    std::string out = "segment\ttier\tserver\tstart_m\tend_m\n";
    for (const auto& [key, ivs] : mr.all()) {
        for (const auto& iv : ivs)
            out += fmt::format("{}\t{}\t{}\t{:.3f}\t{:.3f}\n", key.first, to_string(key.second), iv.server,
                               iv.start_offset, iv.end_offset);
    }
    return out;
}

}  // namespace msmf
