#include "msmf/simcore.hpp"

#include "msmf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <tuple>

namespace msmf {

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::CoverageBoundary: return "coverage-boundary";
        case EventKind::PrepareBandEntry: return "prepare-band-entry";
        case EventKind::TransferComplete: return "transfer-complete";
        case EventKind::IterationTrigger: return "iteration-trigger";
        case EventKind::TraceEnd: return "trace-end";
        case EventKind::NodeArrival: return "node-arrival";
    }
    return "?";
}

const Event& EventQueue::push(Event e) {
    e.sequence = next_seq_++;
    heap_.push(e);
    return heap_.top();
}

Event EventQueue::pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
}

void validate(const ScenarioConfig& c) {
    auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(field, what);
    };
    switch (c.road.kind) {
        case RoadKind::Grid:
            need(c.road.rows >= 1 && c.road.cols >= 1, "road.rows", "grid needs at least one row and column");
            need(c.road.separation_m > 0.0, "road.separation_m", "must be positive");
            break;
        case RoadKind::Straight:
            need(!(c.road.from == c.road.to), "road.to", "straight road needs distinct endpoints");
            break;
        case RoadKind::File:
            need(!c.road.path.empty(), "road.path", "file road needs a path");
            break;
    }
    need(c.lattice_separation_m > 0.0, "lattice_separation_m", "must be positive");
    need(c.regional_cluster_cols >= 1, "regional_cluster_cols", "must be >= 1");
    need(c.regional_cluster_rows >= 1, "regional_cluster_rows", "must be >= 1");
    need(c.regional_cluster_cols * c.regional_cluster_rows > 1, "regional_cluster_cols",
         "1x1 clusters make regional servers identical to local ones");
    need(c.tiers.d_local_s > 0.0, "d_local_ms", "must be positive");
    need(c.tiers.d_regional_s > 0.0, "d_regional_ms", "must be positive");
    need(c.tiers.d_p_s > 0.0, "d_p_ms", "must be positive");
    need(c.tiers.bandwidth_Bps > 0.0, "bandwidth_mbps", "must be positive");
    need(c.tiers.storage_capacity_bytes > 0, "storage_capacity_gb", "must be positive");
    need(c.ue_count >= 1, "ue_count", "must be >= 1");
    need(!c.speeds_mps.empty(), "speeds_mps", "must not be empty");
    for (double v : c.speeds_mps) need(v > 0.0 && std::isfinite(v), "speeds_mps", "speeds must be positive");
    need(c.high_class_fraction >= 0.0 && c.high_class_fraction <= 1.0, "high_class_fraction", "must lie in [0, 1]");
    need(c.low_deadline_s > 0.0, "low_deadline_ms", "must be positive");
    need(c.high_deadline_s > 0.0, "high_deadline_ms", "must be positive");
    need(c.container_min_bytes > 0 && c.container_max_bytes >= c.container_min_bytes, "container_size_mb",
         "needs 0 < min <= max");
    need(c.ram_min_bytes > 0 && c.ram_max_bytes >= c.ram_min_bytes, "ram_size_mb", "needs 0 < min <= max");
    need(c.dirty_rate_per_s >= 0.0, "dirty_rate_per_s", "must be non-negative");
    need(c.threshold_bytes > 0, "threshold_md_mbit", "must be positive");
    need(c.start.t_min_s > 0.0 && c.start.t_max_s >= c.start.t_min_s, "start_time_ms", "needs 0 < min <= max");
    need(c.start.image_max_bytes > c.start.image_min_bytes, "start_time_ms", "reference sizes must increase");
    need(c.tau_min_s >= 0.0, "tau_min_s", "must be non-negative");
    need(c.relay_latency_s >= 0.0, "relay_latency_ms", "must be non-negative");
    need(c.prep_band_m >= 0.0, "prep_band_m", "must be non-negative");
    need(c.lookahead >= 1, "lookahead", "must be >= 1");
    need(c.duration_s >= 0.0 && std::isfinite(c.duration_s), "duration_s", "must be non-negative");
    need(!c.strategies.empty(), "strategies", "must not be empty");
}

RoadGraph build_road(const RoadConfig& road) {
    switch (road.kind) {
        case RoadKind::Grid: return make_grid_graph(road.rows, road.cols, road.separation_m);
        case RoadKind::Straight: return make_straight_graph(road.from, road.to);
        case RoadKind::File: return load_road_graph(road.path);
    }
    throw ConfigError("road.kind", "unknown road kind");
}

World build_world(const ScenarioConfig& config) {
    validate(config);
    RoadGraph graph = build_road(config.road);
    auto stations = build_hex_lattice(graph.bbox().expanded(config.lattice_separation_m), config.lattice_separation_m);
    auto servers = build_tiers(stations, config.regional_cluster_cols, config.regional_cluster_rows, config.tiers);
    Topology topology(std::move(stations), std::move(servers));
    MrMap mr = build_mr_map(graph, topology);
    return World{std::move(graph), std::move(topology), std::move(mr)};
}

namespace {

struct Crossing {
    double t = 0.0;
    ServerId server = kNoServer;
    std::size_t leg = 0;
    double offset = 0.0;
};

/// Server changes along a planned trip on one tier; `initial` gets the
/// server at the start position.
std::vector<Crossing> crossings_of(const TripPlan& plan, const MrMap& mr, Tier tier, double speed,
                                   ServerId& initial) {
    std::vector<Crossing> out;
    ServerId cur = kNoServer;
    for (std::size_t li = 0; li < plan.legs.size(); ++li) {
        const Leg& leg = plan.legs[li];
        const auto ivs = mr.intervals(leg.segment, tier);
        std::size_t k = mr.locate(leg.segment, tier, leg.from_offset, leg.heading);
        if (li == 0) {
            cur = ivs[k].server;
            initial = cur;
        } else if (ivs[k].server != cur) {
            cur = ivs[k].server;
            out.push_back({leg.t_begin, cur, li, leg.from_offset});
        }
        if (leg.heading == Heading::Forward) {
            for (; k + 1 < ivs.size() && ivs[k].end_offset < leg.to_offset; ++k) {
                if (ivs[k + 1].server == cur) continue;
                cur = ivs[k + 1].server;
                const double b = ivs[k].end_offset;
                out.push_back({leg.t_begin + (b - leg.from_offset) / speed, cur, li, b});
            }
        } else {
            for (; k > 0 && ivs[k].start_offset > leg.to_offset; --k) {
                if (ivs[k - 1].server == cur) continue;
                cur = ivs[k - 1].server;
                const double b = ivs[k].start_offset;
                out.push_back({leg.t_begin + (leg.from_offset - b) / speed, cur, li, b});
            }
        }
    }
    return out;
}

std::size_t leg_at(const TripPlan& plan, double t) {
    auto it = std::upper_bound(plan.legs.begin(), plan.legs.end(), t,
                               [](double v, const Leg& l) { return v < l.t_begin; });
    if (it == plan.legs.begin()) return 0;
    return static_cast<std::size_t>(std::distance(plan.legs.begin(), it)) - 1;
}

RoadPosition route_start(const RoadGraph& graph) {
    SegmentId lowest = graph.segments().front().id;
    for (const auto& s : graph.segments()) lowest = std::min(lowest, s.id);
    return {lowest, 0.0, Heading::Forward};
}

// Same-time events of one UE: handoff first, then prepare band, then node, then trace end.
int rank(EventKind k) {
    switch (k) {
        case EventKind::CoverageBoundary: return 0;
        case EventKind::PrepareBandEntry: return 1;
        case EventKind::NodeArrival: return 2;
        case EventKind::TraceEnd: return 3;
        default: return 4;
    }
}

void schedule_sessions(EventQueue& q, SessionPool& pool) {
    for (std::size_t id : pool.drain_touched()) {
        const auto& s = pool.at(id);
        const double te = s.next_event_time();
        if (te == kNever) continue;
        Event e;
        e.time = te;
        e.kind = s.transferring() ? EventKind::TransferComplete : EventKind::IterationTrigger;
        e.session = id;
        q.push(e);
    }
}

}  // namespace

RunReport run(const ScenarioConfig& config, const World& world, std::int64_t run_id, std::uint64_t mseed) {
    validate(config);
    RunReport report;
    report.run_id = run_id;
    report.strategy = config.strategy;
    report.seed = mseed;

    StrategyContext ctx;
    ctx.kind = config.strategy;
    ctx.graph = &world.graph;
    ctx.mr = &world.mr;
    ctx.prediction = {config.tau_min_s, config.relay_latency_s, config.lookahead, config.tiers};
    ctx.prep_band_m = config.prep_band_m;
    ctx.report = config.report;
    ctx.run_id = run_id;

    SessionPool pool(world.topology, config.tiers.bandwidth_Bps, config.threshold_bytes);
    std::vector<UeController> ues;
    std::vector<TripPlan> plans;
    EventQueue queue;

    for (int i = 0; i < config.ue_count; ++i) {
        const std::uint64_t useed = derive_seed(mseed, static_cast<std::uint64_t>(i));
        Rng attrs(derive_seed(useed, 0));
        Rng route(derive_seed(useed, 1));

        const bool high = attrs.bernoulli(config.high_class_fraction);
        ContainerSpec spec;
        spec.image_bytes = config.container_min_bytes + static_cast<std::int64_t>(attrs.index(
                               static_cast<std::size_t>(config.container_max_bytes - config.container_min_bytes + 1)));
        spec.ram_bytes = config.ram_min_bytes + static_cast<std::int64_t>(attrs.index(
                             static_cast<std::size_t>(config.ram_max_bytes - config.ram_min_bytes + 1)));
        spec.dirty_rate_per_s = config.dirty_rate_per_s;
        spec.start = config.start;

        const double speed = config.speeds_mps[static_cast<std::size_t>(i) % config.speeds_mps.size()];
        const RoadPosition start =
            config.spawn == SpawnMode::Random ? random_position(world.graph, route) : route_start(world.graph);
        TripPlan plan = plan_trip(world.graph, start, speed, config.duration_s, route, config.spawn == SpawnMode::Route);
        if (plan.legs.empty()) continue;

        UeState st;
        st.ue_id = i;
        st.pos = start;
        st.speed = speed;
        st.latency_class = high ? LatencyClass::high(config.high_deadline_s) : LatencyClass::low(config.low_deadline_s);

        TierChoice tier{Tier::Local, false};
        if (uses_tiers(config.strategy))
            tier = select_tier(st.latency_class, config.tiers.d_local_s, config.tiers.d_regional_s, config.tiers.d_p_s);
        else
            tier.deadline_violation = config.tiers.d_local_s + config.tiers.d_p_s > st.latency_class.deadline_s;

        ServerId initial = kNoServer;
        const auto crossings = crossings_of(plan, world.mr, tier.tier, speed, initial);
        st.serving_server = initial;

        UeSummary summary{i, speed, st.latency_class.name, tier.tier, tier.deadline_violation, initial,
                          spec.image_bytes, spec.ram_bytes, {initial}};
        for (const auto& c : crossings) summary.visited.push_back(c.server);
        report.ues.push_back(std::move(summary));

        const std::size_t ue_index = ues.size();
        std::vector<Event> evs;
        double prev = 0.0;
        for (const auto& c : crossings) {
            evs.push_back({c.t, 0, EventKind::CoverageBoundary, ue_index, c.leg, c.server, c.offset, 0});
            if (config.strategy == StrategyKind::Nearest) {
                const double tb = std::max(prev, c.t - config.prep_band_m / speed);
                evs.push_back({tb, 0, EventKind::PrepareBandEntry, ue_index, leg_at(plan, tb), c.server, 0.0, 0});
            }
            prev = c.t;
        }
        for (std::size_t li = 1; li < plan.legs.size(); ++li)
            evs.push_back({plan.legs[li].t_begin, 0, EventKind::NodeArrival, ue_index, li, kNoServer, 0.0, 0});
        evs.push_back({plan.end_time(), 0, EventKind::TraceEnd, ue_index, plan.legs.size() - 1, kNoServer, 0.0, 0});
        std::stable_sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) {
            return std::make_tuple(a.time, rank(a.kind)) < std::make_tuple(b.time, rank(b.kind));
        });
        for (const auto& e : evs) queue.push(e);

        ues.emplace_back(ctx, pool, report.records, std::move(st), spec, tier.tier, tier.deadline_violation);
        plans.push_back(std::move(plan));
    }

    for (auto& ue : ues) {
        ue.on_coverage_entry(0.0);
        schedule_sessions(queue, pool);
    }

    while (!queue.empty()) {
        const Event ev = queue.pop();
        ++report.events_processed;
        if (ev.kind == EventKind::TransferComplete || ev.kind == EventKind::IterationTrigger) {
            auto& s = pool.at(ev.session);
            if (!s.active() || s.next_event_time() != ev.time) continue;
            s.advance_to(ev.time);
            pool.touch(ev.session);
            schedule_sessions(queue, pool);
            continue;
        }
        auto& ue = ues[ev.ue];
        const TripPlan& plan = plans[ev.ue];
        const Leg& leg = plan.legs[ev.leg];
        ue.ue().pos = ev.kind == EventKind::CoverageBoundary ? RoadPosition{leg.segment, ev.offset, leg.heading}
                                                             : position_on_leg(leg, ev.time);
        switch (ev.kind) {
            case EventKind::CoverageBoundary: {
                ++report.boundary_crossings;
                const int hops = ue.relay_hops();
                const bool returning = ue.ue().serving_server == ev.server;
                const std::size_t before = report.records.size();
                ue.on_handoff_signal(ev.time, ev.server);
                int kinds = 0;
                for (std::size_t r = before; r < report.records.size(); ++r) {
                    if (report.records[r].kind == RecordKind::Precopy) ++report.precopy_resolutions, ++kinds;
                    if (report.records[r].kind == RecordKind::Cold) ++report.cold_resolutions, ++kinds;
                }
                if (ue.relay_hops() > hops) ++report.relay_resolutions, ++kinds;
                if (returning) ++report.return_resolutions, ++kinds;
                if (kinds != 1)
                    throw InvariantViolation(fmt::format("ue {} boundary at t={} resolved {} ways", ev.ue, ev.time, kinds));
                ue.on_coverage_entry(ev.time);
                break;
            }
            case EventKind::PrepareBandEntry: ue.on_prepare_band(ev.time, ev.server); break;
            case EventKind::NodeArrival: ue.on_node_arrival(ev.time); break;
            case EventKind::TraceEnd: ue.on_trace_end(ev.time); break;
            default: break;
        }
        schedule_sessions(queue, pool);
    }

    for (std::size_t id = 0; id < pool.size(); ++id)
        if (pool.at(id).active()) throw InvariantViolation(fmt::format("session {} still active at end of run", id));
    report.session_bytes = pool.total_bytes();
    report.storage_rejections = pool.rejections();
    std::int64_t record_bytes = 0;
    for (const auto& r : report.records) record_bytes += r.traffic_bytes;
    if (record_bytes != report.session_bytes)
        throw InvariantViolation(
            fmt::format("record traffic {} differs from session traffic {}", record_bytes, report.session_bytes));
    return report;
}

RunReport run(const ScenarioConfig& config) {
    const World world = build_world(config);
    return run(config, world, 0, mobility_seed(config.seed, 0));
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t speed_index, std::size_t strategy_index) noexcept {
    return derive_seed(derive_seed(seed, speed_index), strategy_index);
}

std::uint64_t mobility_seed(std::uint64_t seed, std::size_t speed_index) noexcept {
    return seed + 0x9E3779B97F4A7C15ULL * speed_index;
}

std::vector<RunReport> sweep(const ScenarioConfig& config, std::span<const double> speeds,
                             std::span<const StrategyKind> strategies, bool parallel) {
    if (speeds.empty()) throw ConfigError("speeds_mps", "sweep needs at least one speed");
    if (strategies.empty()) throw ConfigError("strategies", "sweep needs at least one strategy");
    const World world = build_world(config);
    const std::size_t cells = speeds.size() * strategies.size();
    std::vector<RunReport> out(cells);

    auto run_cell = [&](std::size_t c) {
        const std::size_t si = c / strategies.size();
        const std::size_t ki = c % strategies.size();
        ScenarioConfig cfg = config;
        cfg.speeds_mps = {speeds[si]};
        cfg.strategy = strategies[ki];
        out[c] = run(cfg, world, static_cast<std::int64_t>(c), mobility_seed(config.seed, si));
        out[c].seed = cell_seed(config.seed, si, ki);
    };

    if (!parallel || cells == 1) {
        for (std::size_t c = 0; c < cells; ++c) run_cell(c);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cells);
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(cells)));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < cells; c = next++) {
                try {
                    run_cell(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<SummaryRow> aggregate(std::span<const RunReport> reports) {
    struct Acc {
        std::int64_t records = 0;
        double traffic = 0.0;
        double downtime = 0.0;
        std::int64_t ues = 0;
    };
    std::map<std::pair<StrategyKind, double>, Acc> groups;
    for (const auto& rep : reports) {
        for (const auto& u : rep.ues) ++groups[{rep.strategy, u.speed_mps}].ues;
        for (const auto& r : rep.records) {
            auto& g = groups[{r.strategy, r.speed_mps}];
            ++g.records;
            g.traffic += static_cast<double>(r.traffic_bytes);
            g.downtime += r.downtime_s;
        }
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, g] : groups) {
        SummaryRow row;
        row.strategy = key.first;
        row.speed_mps = key.second;
        row.records = g.records;
        row.ue_count = g.ues;
        if (g.records > 0) {
            row.mean_traffic_bytes = g.traffic / static_cast<double>(g.records);
            row.mean_downtime_s = g.downtime / static_cast<double>(g.records);
        }
        row.traffic_per_ue_bytes = g.ues > 0 ? g.traffic / static_cast<double>(g.ues) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace msmf
