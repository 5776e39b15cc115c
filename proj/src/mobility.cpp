#include "msmf/mobility.hpp"

#include "msmf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace msmf {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                  : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
            cell.remove_suffix(1);
        out.push_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t row, std::size_t col) {
    T value{};
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end || cell.empty())
        throw ParseError(row, col, "not a number: '" + std::string(cell) + "'");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) throw ParseError(row, col, "non-finite value");
    }
    return value;
}

bool touches(const RoadSegment& seg, NodeId n) { return seg.from == n || seg.to == n; }

}  // namespace

RoadPosition random_position(const RoadGraph& graph, Rng& rng) {
    const auto segs = graph.segments();
    if (segs.empty()) throw EmptyGraph();
    const auto& seg = segs[rng.index(segs.size())];
    const double offset = rng.uniform01() * seg.length();
    const Heading heading = rng.bernoulli(0.5) ? Heading::Forward : Heading::Backward;
    return {seg.id, offset, heading};
}

Trace generate_trip(const RoadGraph& graph, std::uint64_t seed, double speed, double duration, double dt,
                    std::int64_t ue_id) {
    if (!(speed >= 0.0)) throw OutOfRange("speed must be non-negative");
    if (!(duration > 0.0)) throw OutOfRange("duration must be positive");
    if (!(dt > 0.0)) throw OutOfRange("dt must be positive");
    Rng rng(seed);
    RoadPosition pos = random_position(graph, rng);
    Trace trace{ue_id, {}};
    const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
    trace.samples.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        if (k > 0) pos = advance(graph, pos, speed * dt, rng);
        trace.samples.push_back({static_cast<double>(k) * dt, graph.point_at(pos.segment, pos.offset)});
    }
    return trace;
}

TripPlan plan_trip(const RoadGraph& graph, RoadPosition start, double speed, double duration, Rng& turns,
                   bool stop_at_dead_end) {
    TripPlan plan;
    if (!(duration > 0.0)) return plan;
    RoadPosition pos = start;
    if (!(speed > 0.0)) {
        plan.legs.push_back({pos.segment, pos.heading, pos.offset, pos.offset, 0.0, duration});
        return plan;
    }
    double t = 0.0;
    while (t < duration) {
        const double room = remaining_on_segment(graph, pos);
        if (room <= 0.0) {
            const auto& seg = graph.segment(pos.segment);
            const NodeId node = seg.end_node(pos.heading);
            const bool dead_end = graph.incident(node).size() == 1;
            if (dead_end && stop_at_dead_end) {
                plan.left_network = true;
                break;
            }
            pos = continue_at_node(graph, pos.segment, pos.heading, turns);
            continue;
        }
        const double sign = pos.heading == Heading::Forward ? 1.0 : -1.0;
        const double t_node = t + room / speed;
        if (t_node >= duration) {
            const double end = pos.offset + sign * (duration - t) * speed;
            plan.legs.push_back({pos.segment, pos.heading, pos.offset, end, t, duration});
            break;
        }
        const double end = pos.heading == Heading::Forward ? graph.segment(pos.segment).length() : 0.0;
        plan.legs.push_back({pos.segment, pos.heading, pos.offset, end, t, t_node});
        pos.offset = end;
        t = t_node;
    }
    return plan;
}

RoadPosition position_on_leg(const Leg& leg, double t) {
    if (leg.t_end <= leg.t_begin) return {leg.segment, leg.from_offset, leg.heading};
    const double f = std::clamp((t - leg.t_begin) / (leg.t_end - leg.t_begin), 0.0, 1.0);
    return {leg.segment, leg.from_offset + (leg.to_offset - leg.from_offset) * f, leg.heading};
}

std::vector<Trace> ingest_traces(std::istream& in, const TraceFormat& format) {
    std::optional<GeoOrigin> origin = format.origin;
    std::vector<Trace> traces;
    std::map<std::int64_t, std::size_t> index;
    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    bool geographic = false;

    while (std::getline(in, line)) {
        ++row;
        std::string_view view(line);
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (view.front() == '#') {
            auto cells = split_csv(view.substr(1));
            if (!cells.empty() && cells[0] == "origin") {
                if (cells.size() != 3) throw ParseError(row, 1, "origin line needs '# origin,<lat>,<lon>'");
                if (!format.origin)
                    origin = GeoOrigin{parse_number<double>(cells[1], row, 2), parse_number<double>(cells[2], row, 3)};
            }
            continue;
        }
        auto cells = split_csv(view);
        if (!have_header) {
            if (cells.size() != 4 || cells[0] != "ue_id" || cells[1] != "t_s")
                throw ParseError(row, 1, "expected header 'ue_id,t_s,x_m,y_m' or 'ue_id,t_s,lat,lon'");
            if (cells[2] == "x_m" && cells[3] == "y_m") {
                geographic = false;
            } else if (cells[2] == "lat" && cells[3] == "lon") {
                geographic = true;
                if (!origin) throw ParseError(row, 3, "lat/lon input needs a declared origin");
            } else {
                throw ParseError(row, 3, "unknown coordinate columns");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != 4) throw ParseError(row, cells.size() < 4 ? cells.size() + 1 : 5, "expected 4 columns");
        const auto ue = parse_number<std::int64_t>(cells[0], row, 1);
        const double t = parse_number<double>(cells[1], row, 2);
        const double a = parse_number<double>(cells[2], row, 3);
        const double b = parse_number<double>(cells[3], row, 4);
        Point p{a, b};
        if (geographic) {
            try {
                p = project_geographic(a, b, *origin);
            } catch (const OutOfRange& e) {
                throw ParseError(row, 3, e.what());
            }
        }
        auto [it, fresh] = index.try_emplace(ue, traces.size());
        if (fresh) traces.push_back({ue, {}});
        auto& samples = traces[it->second].samples;
        if (!samples.empty() && !(t > samples.back().t))
            throw NonMonotonicTime(fmt::format("row {}: time {} does not follow {} for ue {}", row, t,
                                               samples.back().t, ue));
        samples.push_back({t, p});
    }
    if (!have_header) throw ParseError(row, 1, "missing header");
    return traces;
}

Trace ingest_trace(std::istream& in, const TraceFormat& format) {
    auto traces = ingest_traces(in, format);
    if (traces.size() != 1)
        throw ParseError(0, 1, fmt::format("expected exactly one ue_id, found {}", traces.size()));
    return std::move(traces.front());
}

void write_traces_csv(std::ostream& out, const std::vector<Trace>& traces) {
    out << "ue_id,t_s,x_m,y_m\n";
    for (const auto& tr : traces)
        for (const auto& s : tr.samples) out << fmt::format("{},{:.6f},{:.9f},{:.9f}\n", tr.ue_id, s.t, s.point.x, s.point.y);
}

Kinematics kinematics_from_trace(const Trace& trace, const RoadGraph& graph, double t) {
    const auto& s = trace.samples;
    if (s.empty() || t < s.front().t || t > s.back().t)
        throw OutOfRange(fmt::format("time {} outside trace range", t));
    if (s.size() == 1) {
        const auto m = match_road(graph, s.front().point);
        return {{m.segment, m.offset, Heading::Forward}, 0.0, m.lateral_distance};
    }
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const TraceSample& x) { return v < x.t; });
    std::size_t hi = static_cast<std::size_t>(std::distance(s.begin(), it));
    hi = std::clamp<std::size_t>(hi, 1, s.size() - 1);
    const auto& a = s[hi - 1];
    const auto& b = s[hi];
    const double f = (t - a.t) / (b.t - a.t);
    const Point p = a.point + (b.point - a.point) * f;

    const auto here = match_road(graph, p);
    const auto m0 = match_road(graph, a.point);
    const auto m1 = match_road(graph, b.point);
    Heading heading = Heading::Forward;
    if (m0.segment == m1.segment) {
        heading = m1.offset >= m0.offset ? Heading::Forward : Heading::Backward;
    } else {
        const auto& s0 = graph.segment(m0.segment);
        const auto& s1 = graph.segment(m1.segment);
        if (here.segment == m0.segment)
            heading = touches(s1, s0.to) ? Heading::Forward : Heading::Backward;
        else if (here.segment == m1.segment)
            heading = touches(s0, s1.from) ? Heading::Forward : Heading::Backward;
    }
    const double speed = distance(a.point, b.point) / (b.t - a.t);
    return {{here.segment, here.offset, heading}, speed, here.lateral_distance};
}

bool should_report(UeState& ue, const RoadGraph& graph, const ReportThresholds& thresholds) {
    const Point here = graph.point_at(ue.pos.segment, ue.pos.offset);
    bool report = !ue.reported.has_value();
    if (!report) {
        const auto& last = *ue.reported;
        const bool moved = distance(here, last.point) > thresholds.distance_m;
        const bool flipped = last.pos.segment == ue.pos.segment && last.pos.heading != ue.pos.heading;
        const bool speed_changed = std::abs(ue.speed - last.speed) > thresholds.speed_change_mps;
        report = moved || flipped || speed_changed;
    }
    if (report) ue.reported = ReportedStatus{ue.pos, here, ue.speed};
    return report;
}

}  // namespace msmf
