#include "support.hpp"

#include "msmf/errors.hpp"
#include "msmf/prediction.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace msmf;

namespace {

UeState ue_at(RoadPosition pos, double speed, LatencyClass cls, ServerId serving) {
    UeState ue;
    ue.pos = pos;
    ue.speed = speed;
    ue.latency_class = cls;
    ue.serving_server = serving;
    return ue;
}

}  // namespace

TEST_CASE("select_tier") {
    auto low = select_tier(LatencyClass::low(0.030), 0.010, 0.050, 0.010);
    CHECK(low.tier == Tier::Local);
    CHECK_FALSE(low.deadline_violation);
    auto high = select_tier(LatencyClass::high(0.150), 0.010, 0.050, 0.010);
    CHECK(high.tier == Tier::Regional);
    CHECK_FALSE(high.deadline_violation);
    auto tight = select_tier(LatencyClass::low(0.005), 0.010, 0.050, 0.010);
    CHECK(tight.tier == Tier::Local);
    CHECK(tight.deadline_violation);
}

TEST_CASE("select_tier is scale invariant") {
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
        const double dl = rng.uniform(0.001, 0.05), dr = dl + rng.uniform(0.0, 0.1), dp = rng.uniform(0.0, 0.02);
        const double deadline = rng.uniform(0.001, 0.2);
        const double k = rng.uniform(0.1, 50.0);
        const auto a = select_tier(LatencyClass::low(deadline), dl, dr, dp);
        const auto b = select_tier(LatencyClass::low(deadline * k), dl * k, dr * k, dp * k);
        // Scaling can flip a comparison only when it sits at equality within rounding.
        const bool near_tie = std::abs(dr + dp - deadline) < 1e-12 || std::abs(dl + dp - deadline) < 1e-12;
        if (!near_tie) {
            CHECK(a.tier == b.tier);
            CHECK(a.deadline_violation == b.deadline_violation);
        }
    }
}

TEST_CASE("next_servers on the A/B/C segment") {
    const auto fx = testkit::make_abc();
    const auto fwd = next_servers(fx.mr, fx.graph, {0, 500.0, Heading::Forward}, Tier::Local, 8);
    REQUIRE(fwd.path.size() == 2);
    CHECK(fwd.path[0].server() == 1);
    CHECK(fwd.path[0].entry_distance == 0.0);
    CHECK(fwd.path[0].width == doctest::Approx(450.0));
    CHECK(fwd.path[1].server() == 2);
    CHECK(fwd.path[1].entry_distance == doctest::Approx(450.0));
    CHECK(fwd.path[1].width == doctest::Approx(450.0));
    CHECK(fwd.branches.empty());

    const auto back = next_servers(fx.mr, fx.graph, {0, 500.0, Heading::Backward}, Tier::Local, 8);
    REQUIRE(back.path.size() == 2);
    CHECK(back.path[0].server() == 1);
    CHECK(back.path[0].width == doctest::Approx(50.0));
    CHECK(back.path[1].server() == 0);
    CHECK(back.path[1].entry_distance == doctest::Approx(50.0));

    const auto last = next_servers(fx.mr, fx.graph, {0, 1300.0, Heading::Forward}, Tier::Local, 8);
    REQUIRE(last.path.size() == 1);
    CHECK(last.path[0].server() == 2);
    CHECK(last.path[0].width == doctest::Approx(100.0));

    const auto limited = next_servers(fx.mr, fx.graph, {0, 100.0, Heading::Forward}, Tier::Local, 2);
    CHECK(limited.path.size() == 2);

    CHECK_THROWS_AS(next_servers(fx.mr, fx.graph, {5, 0.0, Heading::Forward}, Tier::Local, 8), UnknownSegment);
}

TEST_CASE("next_servers matches sampled traversal on branch-free routes") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto chain = testkit::random_chain(seed, 6);
        const auto fx = testkit::make_fixture(chain.graph);
        Rng rng(seed + 7);
        double total = 0.0;
        for (auto id : chain.order) total += chain.graph.segment(id).length();
        const double s0 = rng.uniform(0.0, total);
        const int dir = rng.bernoulli(0.5) ? 1 : -1;
        const Tier tier = rng.bernoulli(0.7) ? Tier::Local : Tier::Regional;

        const auto runs = testkit::sampled_runs(chain, fx.mr, tier, s0, dir, 0.1);
        const auto up = next_servers(fx.mr, fx.graph, testkit::chain_position(chain, s0, dir), tier, 64);
        CHECK(up.branches.empty());
        REQUIRE(up.path.size() == runs.size());
        for (std::size_t i = 0; i < runs.size(); ++i) {
            CHECK(up.path[i].server() == runs[i].server);
            CHECK(std::abs(up.path[i].entry_distance - runs[i].entry) <= 0.1 + 1e-6);
            if (i > 0) CHECK(up.path[i].entry_distance == doctest::Approx(up.path[i - 1].entry_distance + up.path[i - 1].width));
        }
    }
}

TEST_CASE("apply_skip_rule") {
    auto entry = [](ServerId s, double width, double at) {
        return UpcomingEntry{{s, 0, at, at + width}, at, width};
    };
    const std::vector<UpcomingEntry> bc{entry(1, 50.0, 0.0), entry(2, 550.0, 50.0)};
    const auto hi = LatencyClass::high();
    const auto lo = LatencyClass::low();

    const auto skip = apply_skip_rule(bc, 20.0, 10.0, 0.005, hi, 0.010, 0.010);
    CHECK(skip.target_index == 1);
    CHECK(skip.skipped == std::vector<ServerId>{1});
    CHECK(skip.relay_hops == 1);

    const auto off = apply_skip_rule(bc, 20.0, 0.0, 0.005, hi, 0.010, 0.010);
    CHECK(off.target_index == 0);
    CHECK(off.skipped.empty());
    CHECK(off.relay_hops == 0);

    // 10 ms access + 15 ms relay + 10 ms processing = 35 ms > 30 ms.
    const auto veto = apply_skip_rule(bc, 20.0, 10.0, 0.015, lo, 0.010, 0.010);
    CHECK(veto.target_index == 0);
    CHECK(veto.skipped.empty());

    // Every candidate short: the last one is still the target.
    const std::vector<UpcomingEntry> shorts{entry(1, 20.0, 0.0), entry(2, 20.0, 20.0), entry(0, 20.0, 40.0)};
    const auto all = apply_skip_rule(shorts, 20.0, 10.0, 0.005, hi, 0.010, 0.010);
    CHECK(all.target_index == 2);
    CHECK(all.relay_hops == 2);
}

TEST_CASE("decide on the A/B/C segment") {
    const auto fx = testkit::make_abc();
    const PredictionConfig cfg;
    const RoadPosition at500{0, 500.0, Heading::Forward};

    CHECK(decide(StrategyKind::PM, ue_at(at500, 10.0, LatencyClass::low(), 1), fx.mr, fx.graph, cfg).target == 2);
    const auto from_a = decide(StrategyKind::PM, ue_at(at500, 10.0, LatencyClass::low(), 0), fx.mr, fx.graph, cfg);
    CHECK(from_a.target == 1);
    CHECK(from_a.target_entry_distance == 0.0);

    const auto nearest = decide(StrategyKind::Nearest, ue_at(at500, 10.0, LatencyClass::low(), 1), fx.mr, fx.graph, cfg);
    CHECK_FALSE(nearest.predicted);
    CHECK(nearest.target == kNoServer);

    const auto tier = decide(StrategyKind::PmTier, ue_at(at500, 10.0, LatencyClass::high(), 3), fx.mr, fx.graph, cfg);
    CHECK(tier.chosen_tier == Tier::Regional);
    CHECK(tier.target == kNoServer);
    const auto tier_low = decide(StrategyKind::PmTier, ue_at(at500, 10.0, LatencyClass::low(), 1), fx.mr, fx.graph, cfg);
    CHECK(tier_low.chosen_tier == Tier::Local);
    CHECK(tier_low.target == 2);

    // From A at 100 m/s, B's 500 m lasts 5 s < 10 s: PM-OP jumps to C.
    const auto op = decide(StrategyKind::PmOp, ue_at({0, 300.0, Heading::Forward}, 100.0, LatencyClass::high(), 0),
                           fx.mr, fx.graph, cfg);
    CHECK(op.target == 2);
    CHECK(op.skipped == std::vector<ServerId>{1});
    CHECK(op.relay_hops == 1);
}

TEST_CASE("decide never targets the serving server") {
    const auto fx = testkit::make_fixture(make_grid_graph(3, 3, 500.0));
    const PredictionConfig cfg;
    Rng rng(12);
    const StrategyKind kinds[] = {StrategyKind::PM, StrategyKind::PmOp, StrategyKind::PmTier, StrategyKind::PmOpTier};
    int prestaged = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto& seg = fx.graph.segments()[rng.index(fx.graph.segments().size())];
        const RoadPosition pos{seg.id, rng.uniform(0.0, seg.length()), rng.bernoulli(0.5) ? Heading::Forward : Heading::Backward};
        const auto cls = rng.bernoulli(0.5) ? LatencyClass::low() : LatencyClass::high();
        const auto kind = kinds[rng.index(4)];
        const Tier tier = uses_tiers(kind) && cls.name == LatencyClass::Name::High ? Tier::Regional : Tier::Local;
        const auto iv = fx.mr.intervals(seg.id, tier);
        const ServerId serving = iv[fx.mr.locate(seg.id, tier, pos.offset, pos.heading)].server;
        const auto res = decide(kind, ue_at(pos, rng.uniform(1.0, 30.0), cls, serving), fx.mr, fx.graph, cfg);
        CHECK(res.target != serving);
        if (res.target != kNoServer) {
            auto names = [&](const std::vector<UpcomingEntry>& v) {
                return std::any_of(v.begin(), v.end(), [&](const UpcomingEntry& e) { return e.server() == res.target; });
            };
            CHECK((names(res.upcoming.path) || names(res.upcoming.branches)));
        }
        for (auto p : res.prestage) {
            CHECK(p != serving);
            CHECK(p != res.target);
        }
        prestaged += res.prestage.empty() ? 0 : 1;
    }
    CHECK(prestaged > 0);
}

TEST_CASE("strategy names") {
    for (auto k : {StrategyKind::Nearest, StrategyKind::PM, StrategyKind::PmOp, StrategyKind::PmTier, StrategyKind::PmOpTier})
        CHECK(parse_strategy(to_string(k)) == k);
    CHECK(to_string(StrategyKind::PmOpTier) == "pm-op-tier");
    CHECK_THROWS_AS(parse_strategy("fastest"), ConfigError);
}
