#pragma once

// Upcoming-server prediction along the road, tier selection and the
// short-coverage skip rule.

#include "msmf/latency.hpp"
#include "msmf/mobility.hpp"
#include "msmf/topology.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace msmf {

enum class StrategyKind : std::uint8_t { Nearest, PM, PmOp, PmTier, PmOpTier };

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts nearest | pm | pm-op | pm-tier | pm-op-tier.
StrategyKind parse_strategy(std::string_view text);

inline constexpr bool uses_prediction(StrategyKind k) noexcept { return k != StrategyKind::Nearest; }
inline constexpr bool uses_skip(StrategyKind k) noexcept {
    return k == StrategyKind::PmOp || k == StrategyKind::PmOpTier;
}
inline constexpr bool uses_tiers(StrategyKind k) noexcept {
    return k == StrategyKind::PmTier || k == StrategyKind::PmOpTier;
}

struct TierChoice {
    Tier tier = Tier::Local;
    bool deadline_violation = false;
};

/// Feasible means ue_latency + d_p <= deadline. The larger-coverage feasible
/// tier wins; with nothing feasible the answer is Local, flagged.
TierChoice select_tier(const LatencyClass& cls, double d_local_s, double d_regional_s, double d_p_s);

/// One server's stretch of road ahead of the UE.
struct UpcomingEntry {
    CoverageInterval interval;
    /// Along-route distance from the UE to the start of this stretch.
    double entry_distance = 0.0;
    /// Dis_j along the route; stretches spanning several segments are summed.
    double width = 0.0;

    ServerId server() const noexcept { return interval.server; }
};

struct Upcoming {
    /// Current interval remainder first, then the servers ahead in order.
    std::vector<UpcomingEntry> path;
    /// Equally ranked first servers on each branch after the path ends at a
    /// junction; empty when the path stops for another reason.
    std::vector<UpcomingEntry> branches;
};

/// Walks the coverage map from `pos` in its heading, following degree-2 nodes
/// and stopping at junctions, dead ends or after `lookahead` path entries.
Upcoming next_servers(const MrMap& mr, const RoadGraph& graph, const RoadPosition& pos, Tier tier,
                      std::size_t lookahead);

struct SkipResult {
    std::size_t target_index = 0;
    std::vector<ServerId> skipped;
    int relay_hops = 0;
};

/// Skips candidates whose residence width/speed is below tau_min while the
/// relayed latency still meets the deadline. Falls back to the last candidate
/// when every one is skippable. `candidates` must be nonempty.
SkipResult apply_skip_rule(std::span<const UpcomingEntry> candidates, double speed, double tau_min_s,
                           double relay_latency_s, const LatencyClass& cls, double ue_latency_s, double d_p_s);

struct PredictionConfig {
    double tau_min_s = 10.0;
    double relay_latency_s = 0.005;
    std::size_t lookahead = 8;
    TierParams tiers;
};

struct PredictionResult {
    bool predicted = false;
    Upcoming upcoming;
    Tier chosen_tier = Tier::Local;
    bool deadline_violation = false;
    ServerId target = kNoServer;
    /// Where the UE is when the target takes over (distance along route).
    double target_entry_distance = 0.0;
    std::vector<ServerId> skipped;
    int relay_hops = 0;
    /// Other branch alternates that only get the image staged.
    std::vector<ServerId> prestage;
};

PredictionResult decide(StrategyKind kind, const UeState& ue, const MrMap& mr, const RoadGraph& graph,
                        const PredictionConfig& config);

}  // namespace msmf
