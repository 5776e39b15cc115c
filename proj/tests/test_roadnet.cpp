#include "support.hpp"

#include "msmf/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace msmf;

namespace {

// S: 0 -> 1 along x (400 m); S': 2 -> 1 (300 m) so the shared node is S' end.
RoadGraph elbow_graph() {
    return RoadGraph({{0, {0, 0}}, {1, {400, 0}}, {2, {400, 300}}},
                     {{1, 0, 1, {{0, 0}, {400, 0}}}, {2, 2, 1, {{400, 300}, {400, 0}}}});
}

}  // namespace

TEST_CASE("match: point on a segment is its own projection") {
    const auto g = make_straight_graph({0, 0}, {400, 0});
    const auto m = match_road(g, {120, 0});
    CHECK(m.segment == 0);
    CHECK(m.offset == doctest::Approx(120.0));
    CHECK(m.lateral_distance == 0.0);
}

TEST_CASE("match: shared endpoint goes to the lower segment id") {
    const RoadGraph g({{0, {0, 0}}, {1, {100, 0}}, {2, {200, 0}}},
                      {{9, 1, 2, {{100, 0}, {200, 0}}}, {4, 0, 1, {{0, 0}, {100, 0}}}});
    const auto m = match_road(g, {100, 0});
    CHECK(m.segment == 4);
    CHECK(m.offset == 100.0);
    CHECK(m.lateral_distance == 0.0);
    // Off-road point equidistant from both ends of the shared node.
    const auto side = match_road(g, {100, 30});
    CHECK(side.segment == 4);
    CHECK(side.lateral_distance == doctest::Approx(30.0));
}

TEST_CASE("match: agrees with exhaustive projection on a 3-segment graph") {
    const auto g = testkit::random_graph(11, 3, 1000.0);
    REQUIRE(g.segments().size() == 3);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const Point p{rng.uniform(-200.0, 1200.0), rng.uniform(-200.0, 1200.0)};
        const auto got = match_road(g, p);
        const auto want = testkit::brute_match(g, p);
        REQUIRE(got.segment == want.segment);
        CHECK(got.offset == doctest::Approx(want.offset).epsilon(1e-12));
        CHECK(got.lateral_distance == doctest::Approx(want.lateral_distance).epsilon(1e-12));
    }
}

TEST_CASE("match: agrees with exhaustive projection on random 50-segment graphs") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = testkit::random_graph(seed, 50, 3000.0);
        Rng rng(seed + 100);
        for (int i = 0; i < 400; ++i) {
            const Point p{rng.uniform(-500.0, 3500.0), rng.uniform(-500.0, 3500.0)};
            const auto got = match_road(g, p);
            const auto want = testkit::brute_match(g, p);
            REQUIRE(got.segment == want.segment);
            CHECK(std::abs(got.offset - want.offset) < 1e-9);
            CHECK(std::abs(got.lateral_distance - want.lateral_distance) < 1e-9);
        }
    }
}

TEST_CASE("match: empty graph") {
    const RoadGraph g({{0, {0, 0}}}, {});
    CHECK_THROWS_AS(match_road(g, {0, 0}), EmptyGraph);
}

TEST_CASE("geographic projection") {
    const GeoOrigin o{39.9, 116.4};
    const auto p0 = project_geographic(o.lat, o.lon, o);
    CHECK(p0.x == 0.0);
    CHECK(p0.y == 0.0);

    const auto north = project_geographic(o.lat + 0.001, o.lon, o);
    CHECK(north.x == 0.0);
    CHECK(north.y == doctest::Approx(111.19).epsilon(0.1 / 111.19));

    const GeoOrigin o60{60.0, 10.0};
    const auto east = project_geographic(60.0, 10.001, o60);
    CHECK(east.x == doctest::Approx(55.60).epsilon(0.1 / 55.60));

    CHECK_THROWS_AS(project_geographic(91.0, 0.0, o), OutOfRange);
    CHECK_THROWS_AS(project_geographic(0.0, 181.0, o), OutOfRange);
}

TEST_CASE("geographic projection inverts within 1e-6 m under 1 km") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const GeoOrigin o{rng.uniform(-70.0, 70.0), rng.uniform(-170.0, 170.0)};
        const Point p{rng.uniform(-1000.0, 1000.0), rng.uniform(-1000.0, 1000.0)};
        const auto ll = unproject_geographic(p, o);
        const auto back = project_geographic(ll.lat, ll.lon, o);
        CHECK(distance(back, p) < 1e-6);
    }
}

TEST_CASE("advance examples") {
    const auto g = elbow_graph();
    Rng rng(1);
    const RoadPosition start{1, 100.0, Heading::Forward};
    CHECK(advance(g, start, 0.0, rng) == start);
    CHECK(advance(g, start, 50.0, rng) == RoadPosition{1, 150.0, Heading::Forward});

    // 380 + 50 crosses the degree-2 node onto S' with 30 m to spare. S' runs
    // toward the shared node, so moving away from it means heading Backward.
    const auto onto = advance(g, {1, 380.0, Heading::Forward}, 50.0, rng);
    CHECK(onto.segment == 2);
    CHECK(onto.heading == Heading::Backward);
    CHECK(onto.offset == doctest::Approx(300.0 - 30.0));
    CHECK(distance(g.point_at(2, onto.offset), {400, 0}) == doctest::Approx(30.0));

    CHECK_THROWS_AS(advance(g, start, -1.0, rng), OutOfRange);
    CHECK_THROWS_AS(advance(g, {77, 0.0, Heading::Forward}, 1.0, rng), UnknownSegment);
}

TEST_CASE("advance turns around at a dead end") {
    const auto g = make_straight_graph({0, 0}, {100, 0});
    Rng rng(1);
    const auto p = advance(g, {0, 90.0, Heading::Forward}, 30.0, rng);
    CHECK(p.heading == Heading::Backward);
    CHECK(p.offset == doctest::Approx(80.0));
}

TEST_CASE("advance keeps offsets in range and composes within a segment") {
    const auto g = testkit::random_graph(21, 30, 2000.0);
    Rng pick(8);
    for (int i = 0; i < 2000; ++i) {
        const auto& seg = g.segments()[pick.index(g.segments().size())];
        RoadPosition pos{seg.id, pick.uniform(0.0, seg.length()), pick.bernoulli(0.5) ? Heading::Forward : Heading::Backward};
        Rng turns(static_cast<std::uint64_t>(i));
        const auto moved = advance(g, pos, pick.uniform(0.0, 3000.0), turns);
        REQUIRE(moved.offset >= 0.0);
        REQUIRE(moved.offset <= g.segment(moved.segment).length());

        const double room = remaining_on_segment(g, pos);
        const double a = pick.uniform(0.0, room / 2), b = pick.uniform(0.0, room / 2);
        Rng r1(1), r2(1);
        const auto twice = advance(g, advance(g, pos, a, r1), b, r1);
        const auto once = advance(g, pos, a + b, r2);
        CHECK(twice.segment == once.segment);
        CHECK(twice.heading == once.heading);
        CHECK(twice.offset == doctest::Approx(once.offset).epsilon(1e-12));
    }
}

TEST_CASE("graph validation") {
    using Nodes = std::vector<NodeSpec>;
    using Segs = std::vector<SegmentSpec>;
    const Nodes two{{0, {0, 0}}, {1, {10, 0}}};
    CHECK_THROWS_AS(RoadGraph(Nodes{{0, {0, 0}}, {0, {10, 0}}}, Segs{}), InvalidGraph);
    CHECK_THROWS_AS(RoadGraph(two, Segs{{1, 0, 1, {{0, 0}, {10, 0}}}, {1, 1, 0, {{10, 0}, {0, 0}}}}), InvalidGraph);
    CHECK_THROWS_AS(RoadGraph(two, Segs{{1, 0, 5, {{0, 0}, {10, 0}}}}), InvalidGraph);
    CHECK_THROWS_AS(RoadGraph(two, Segs{{1, 0, 1, {{0, 0}, {10, 1}}}}), InvalidGraph);
    CHECK_THROWS_AS(RoadGraph(two, Segs{{1, 0, 1, {{0, 0}}}}), InvalidGraph);
    CHECK_THROWS_AS(RoadGraph(Nodes{{0, {0, 0}}, {1, {0, 0}}}, Segs{{1, 0, 1, {{0, 0}, {0, 0}}}}), InvalidGraph);
    const Nodes four{{0, {0, 0}}, {1, {10, 0}}, {2, {50, 0}}, {3, {60, 0}}};
    CHECK_THROWS_AS(RoadGraph(four, Segs{{1, 0, 1, {{0, 0}, {10, 0}}}, {2, 2, 3, {{50, 0}, {60, 0}}}}),
                    InvalidGraph);
}

TEST_CASE("segment length is the polyline length") {
    const auto g = testkit::random_graph(4, 40, 2000.0);
    for (const auto& seg : g.segments()) {
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) sum += distance(seg.polyline[i], seg.polyline[i + 1]);
        CHECK(seg.length() == doctest::Approx(sum).epsilon(1e-6));
        CHECK(seg.polyline.front() == g.node(seg.from).pos);
        CHECK(seg.polyline.back() == g.node(seg.to).pos);
    }
    CHECK_THROWS_AS(g.segment(-1), UnknownSegment);
}

TEST_CASE("grid graph") {
    const auto g = make_grid_graph(3, 3, 500.0);
    CHECK(g.segments().size() == 24);
    for (const auto& s : g.segments()) CHECK(s.length() == doctest::Approx(500.0));
    CHECK(make_grid_graph(1, 1, 500.0).segments().size() == 4);
    CHECK_THROWS_AS(make_grid_graph(0, 3, 500.0), InvalidDims);
    CHECK_THROWS_AS(make_grid_graph(3, 3, 0.0), InvalidDims);
}

TEST_CASE("road graph JSON round trip") {
    const auto g = testkit::random_graph(9, 12, 800.0);
    const auto back = parse_road_graph(serialize_road_graph(g));
    REQUIRE(back.segments().size() == g.segments().size());
    for (const auto& s : g.segments()) {
        const auto& t = back.segment(s.id);
        CHECK(t.from == s.from);
        CHECK(t.to == s.to);
        CHECK(t.polyline == s.polyline);
    }
    CHECK_THROWS_AS(parse_road_graph("{"), InvalidGraph);
    CHECK_THROWS_AS(parse_road_graph(R"({"nodes": []})"), InvalidGraph);

    const auto path = std::filesystem::temp_directory_path() / "msmf_graph_roundtrip.json";
    save_road_graph(g, path);
    CHECK(serialize_road_graph(load_road_graph(path)) == serialize_road_graph(g));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_road_graph("/nonexistent/graph.json"), IoError);
}
