#include "msmf/prediction.hpp"

#include "msmf/errors.hpp"

#include <algorithm>
#include <string>

namespace msmf {

std::string_view to_string(StrategyKind kind) noexcept {
    switch (kind) {
        case StrategyKind::Nearest: return "nearest";
        case StrategyKind::PM: return "pm";
        case StrategyKind::PmOp: return "pm-op";
        case StrategyKind::PmTier: return "pm-tier";
        case StrategyKind::PmOpTier: return "pm-op-tier";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view text) {
    for (auto k : {StrategyKind::Nearest, StrategyKind::PM, StrategyKind::PmOp, StrategyKind::PmTier,
                   StrategyKind::PmOpTier})
        if (text == to_string(k)) return k;
    throw ConfigError("strategy", "unknown strategy '" + std::string(text) +
                                      "' (expected nearest, pm, pm-op, pm-tier or pm-op-tier)");
}

TierChoice select_tier(const LatencyClass& cls, double d_local_s, double d_regional_s, double d_p_s) {
    if (d_regional_s + d_p_s <= cls.deadline_s) return {Tier::Regional, false};
    if (d_local_s + d_p_s <= cls.deadline_s) return {Tier::Local, false};
    return {Tier::Local, true};
}

namespace {

double remainder_width(const CoverageInterval& iv, double offset, Heading h) {
    return h == Heading::Forward ? iv.end_offset - offset : offset - iv.start_offset;
}

/// First interval on `seg` (entered at `node`) whose server differs from
/// `avoid`, with its distance from the node.
std::optional<UpcomingEntry> first_different(const MrMap& mr, const RoadSegment& seg, Heading h, Tier tier,
                                             ServerId avoid, double base_distance) {
    const auto ivs = mr.intervals(seg.id, tier);
    const std::size_t n = ivs.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& iv = ivs[h == Heading::Forward ? k : n - 1 - k];
        if (iv.server == avoid) continue;
        const double into = h == Heading::Forward ? iv.start_offset : seg.length() - iv.end_offset;
        return UpcomingEntry{iv, base_distance + into, iv.width()};
    }
    return std::nullopt;
}

}  // namespace

Upcoming next_servers(const MrMap& mr, const RoadGraph& graph, const RoadPosition& pos, Tier tier,
                      std::size_t lookahead) {
    Upcoming out;
    if (lookahead == 0) return out;
    const RoadSegment* seg = &graph.segment(pos.segment);
    Heading h = pos.heading;
    auto ivs = mr.intervals(seg->id, tier);
    std::size_t k = mr.locate(seg->id, tier, pos.offset, h);

    CoverageInterval current = ivs[k];
    if (h == Heading::Forward)
        current.start_offset = pos.offset;
    else
        current.end_offset = pos.offset;
    double travelled = remainder_width(ivs[k], pos.offset, h);
    out.path.push_back({current, 0.0, travelled});

    const std::size_t max_segments = graph.segments().size() + 1;
    std::size_t walked = 0;
    while (true) {
        const bool at_end = h == Heading::Forward ? k + 1 >= ivs.size() : k == 0;
        if (!at_end) {
            k = h == Heading::Forward ? k + 1 : k - 1;
            const auto& iv = ivs[k];
            if (iv.server == out.path.back().server()) {
                out.path.back().width += iv.width();
            } else {
                if (out.path.size() >= lookahead) break;
                out.path.push_back({iv, travelled, iv.width()});
            }
            travelled += iv.width();
            continue;
        }
        const NodeId node = seg->end_node(h);
        std::vector<SegmentId> next;
        for (SegmentId s : graph.incident(node))
            if (s != seg->id) next.push_back(s);
        if (next.empty()) break;
        if (next.size() > 1) {
            const ServerId last = out.path.back().server();
            for (SegmentId s : next) {
                const auto& ns = graph.segment(s);
                const Heading nh = ns.from == node ? Heading::Forward : Heading::Backward;
                if (auto e = first_different(mr, ns, nh, tier, last, travelled)) out.branches.push_back(*e);
            }
            break;
        }
        if (++walked > max_segments) break;
        seg = &graph.segment(next.front());
        h = seg->from == node ? Heading::Forward : Heading::Backward;
        ivs = mr.intervals(seg->id, tier);
        k = h == Heading::Forward ? 0 : ivs.size() - 1;
        const auto& iv = ivs[k];
        if (iv.server == out.path.back().server()) {
            out.path.back().width += iv.width();
        } else {
            if (out.path.size() >= lookahead) break;
            out.path.push_back({iv, travelled, iv.width()});
        }
        travelled += iv.width();
    }
    return out;
}

SkipResult apply_skip_rule(std::span<const UpcomingEntry> candidates, double speed, double tau_min_s,
                           double relay_latency_s, const LatencyClass& cls, double ue_latency_s, double d_p_s) {
    SkipResult r;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        r.target_index = i;
        if (i + 1 == candidates.size()) break;
        const bool short_stay = speed > 0.0 && candidates[i].width / speed < tau_min_s;
        const int hops = r.relay_hops + 1;
        const bool relay_ok = ue_latency_s + hops * relay_latency_s + d_p_s <= cls.deadline_s;
        if (!(short_stay && relay_ok)) break;
        r.skipped.push_back(candidates[i].server());
        r.relay_hops = hops;
    }
    return r;
}

PredictionResult decide(StrategyKind kind, const UeState& ue, const MrMap& mr, const RoadGraph& graph,
                        const PredictionConfig& config) {
    PredictionResult res;
    const auto& tp = config.tiers;
    if (uses_tiers(kind)) {
        const auto choice = select_tier(ue.latency_class, tp.d_local_s, tp.d_regional_s, tp.d_p_s);
        res.chosen_tier = choice.tier;
        res.deadline_violation = choice.deadline_violation;
    } else {
        res.chosen_tier = Tier::Local;
        res.deadline_violation = tp.d_local_s + tp.d_p_s > ue.latency_class.deadline_s;
    }
    if (!uses_prediction(kind)) return res;
    res.predicted = true;
    res.upcoming = next_servers(mr, graph, ue.pos, res.chosen_tier, config.lookahead);

    const auto& path = res.upcoming.path;
    std::vector<UpcomingEntry> cands;
    for (std::size_t i = 0; i < path.size(); ++i)
        if (i > 0 || path[i].server() != ue.serving_server) cands.push_back(path[i]);

    if (!cands.empty()) {
        std::size_t idx = 0;
        if (uses_skip(kind)) {
            const double ue_latency = res.chosen_tier == Tier::Regional ? tp.d_regional_s : tp.d_local_s;
            auto sk = apply_skip_rule(cands, ue.speed, config.tau_min_s, config.relay_latency_s, ue.latency_class,
                                      ue_latency, tp.d_p_s);
            idx = sk.target_index;
            res.skipped = std::move(sk.skipped);
            res.relay_hops = sk.relay_hops;
        }
        if (cands[idx].server() != ue.serving_server) {
            res.target = cands[idx].server();
            res.target_entry_distance = cands[idx].entry_distance;
        }
        return res;
    }

    std::vector<const UpcomingEntry*> alts;
    for (const auto& b : res.upcoming.branches)
        if (b.server() != ue.serving_server) alts.push_back(&b);
    if (alts.empty()) return res;
    std::sort(alts.begin(), alts.end(), [](auto* a, auto* b) { return a->server() < b->server(); });
    res.target = alts.front()->server();
    res.target_entry_distance = alts.front()->entry_distance;
    for (std::size_t i = 1; i < alts.size(); ++i)
        if (alts[i]->server() != res.target &&
            std::find(res.prestage.begin(), res.prestage.end(), alts[i]->server()) == res.prestage.end())
            res.prestage.push_back(alts[i]->server());
    return res;
}

}  // namespace msmf
