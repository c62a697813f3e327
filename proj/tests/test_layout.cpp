#include "doctest.h"
#include "generators.hpp"
#include "nnedit/error.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/layout/layout.hpp"
#include "nnedit/zoo/zoo.hpp"
#include "oracles.hpp"

using namespace nnedit;
using namespace nnedit::layout;

namespace {

IRModel graph(const std::vector<std::string>& ids, const std::vector<std::pair<std::string, std::string>>& edges,
              LayerType type = LayerType::ReLU) {
    IRModel m("g");
    for (const auto& id : ids) {
        IRLayer l;
        l.id = id;
        l.type = type;
        m.insert_layer(l);
    }
    for (const auto& [f, t] : edges) m.insert_connection(f, t);
    return m;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
}

const LayoutConfig cfg;
const double cx = cfg.column_pitch(), cy = cfg.row_pitch();

}  // namespace

TEST_SUITE("layout") {

TEST_CASE("config defaults") {
    CHECK(cfg.layer_width == 130);
    CHECK(cfg.layer_height == 40);
    CHECK(cfg.hgap == 60);
    CHECK(cfg.vgap == 40);
    CHECK(cfg.overlap_step == cfg.layer_height + cfg.vgap);
    LayoutConfig bad;
    bad.hgap = 0;
    CHECK_THROWS_AS(bad.check(), SchemaViolation);
}

TEST_CASE("index of a chain") {
    const GraphIndex g = build_index(graph({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}));
    CHECK(g.in_degree == std::vector<std::size_t>{0, 1, 1});
    CHECK(g.out_degree == std::vector<std::size_t>{1, 1, 0});
    CHECK(g.edge_count() == 2);
}

TEST_CASE("index of a diamond") {
    const GraphIndex g = build_index(graph({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}}));
    CHECK(g.input_length[g.slot.at("D")] == 2);
    CHECK(g.output_length[g.slot.at("A")] == 2);
    CHECK(g.adjacency[g.slot.at("A")] == std::vector<std::size_t>{1, 2});
    std::size_t in = 0, out = 0;
    for (std::size_t i = 0; i < g.size(); ++i) in += g.in_degree[i], out += g.out_degree[i];
    CHECK(in == 4);
    CHECK(out == 4);
}

TEST_CASE("index of an empty model") {
    const GraphIndex g = build_index(IRModel{});
    CHECK(g.size() == 0);
    CHECK(g.in_degree.empty());
    CHECK(g.adjacency.empty());
}

TEST_CASE("cycle detection") {
    CHECK(detect_cycles(build_index(graph({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}}))).empty());
    CHECK(detect_cycles(build_index(graph({"A", "B"}, {{"A", "B"}, {"B", "A"}}))) == std::vector<Connection>{{"B", "A"}});
    CHECK(detect_cycles(build_index(graph({"A"}, {{"A", "A"}}))) == std::vector<Connection>{{"A", "A"}});
    // cycle not reachable from any source
    const auto g = build_index(graph({"S", "X", "Y"}, {{"X", "Y"}, {"Y", "X"}}));
    CHECK(detect_cycles(g).size() == 1);
}

TEST_CASE("chain is a single column") {
    const auto pos = compute_layout(graph({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}));
    CHECK(pos["A"] == Point{0, 0});
    CHECK(pos["B"] == Point{0, cy});
    CHECK(pos["C"] == Point{0, 2 * cy});
}

TEST_CASE("fork spreads siblings around the parent") {
    const auto pos = compute_layout(graph({"A", "B", "C"}, {{"A", "B"}, {"A", "C"}}));
    CHECK(pos["B"].y == pos["C"].y);
    CHECK(pos["B"].y == cy);
    CHECK(pos["C"].x - pos["B"].x == cx);
    CHECK((pos["B"].x + pos["C"].x) / 2 == pos["A"].x);
}

TEST_CASE("diamond join sits centred below") {
    const auto pos = compute_layout(graph({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}}));
    CHECK(pos["D"].y == std::max(pos["B"].y, pos["C"].y) + cy);
    CHECK(pos["D"].x == (pos["B"].x + pos["C"].x) / 2);
}

TEST_CASE("multiple sources share row 0") {
    const auto pos = compute_layout(graph({"q", "i", "m"}, {{"q", "m"}, {"i", "m"}}));
    CHECK(pos["q"] == Point{0, 0});
    CHECK(pos["i"] == Point{cx, 0});
    CHECK(pos["m"].y == cy);
    CHECK(pos["m"].x == cx / 2);
}

TEST_CASE("overlaps move downward") {
    // two forks whose children would collide on the same row
    const IRModel m = graph({"a", "b", "a1", "a2", "a3", "b1", "b2", "b3"},
                            {{"a", "a1"}, {"a", "a2"}, {"a", "a3"}, {"b", "b1"}, {"b", "b2"}, {"b", "b3"}});
    const auto pos = compute_layout(m);
    CHECK(oracle::layout_violations(m, pos, cfg).empty());
    CHECK(pos["b1"].y > pos["a1"].y);
    CHECK(pos["b1"].y == pos["b3"].y);
}

TEST_CASE("cycles are tolerated") {
    const IRModel m = graph({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "B"}});
    const auto pos = compute_layout(m);
    CHECK(pos.size() == 3);
    CHECK(pos["C"].y > pos["B"].y);
    const auto paths = route_connections(m, pos);
    REQUIRE(paths.size() == 3);
    CHECK(paths[2].back_edge);
    CHECK(paths[2].points.size() > 2);
    // the margin lane is left of every layer
    double min_x = 0;
    for (const auto& p : paths[2].points) min_x = std::min(min_x, p.x);
    CHECK(min_x < 0);
    CHECK(oracle::routing_violations(m, pos, paths, cfg).empty());

    const IRModel self = graph({"A"}, {{"A", "A"}});
    const auto sp = route_connections(self, compute_layout(self));
    REQUIRE(sp.size() == 1);
    CHECK(sp[0].back_edge);
}

TEST_CASE("vertical chain edge is straight") {
    const IRModel m = graph({"A", "B"}, {{"A", "B"}});
    const auto paths = route_connections(m, compute_layout(m));
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].points == std::vector<Point>{{65, 40}, {65, cy}});
}

TEST_CASE("diamond edges are straight") {
    const IRModel m = graph({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
    const auto pos = compute_layout(m);
    const auto paths = route_connections(m, pos);
    for (const auto& p : paths) CHECK(p.points.size() == 2);
    CHECK(paths[0].points.front() == Point{pos["A"].x + 65, pos["A"].y + 40});
    CHECK(paths[0].points.back() == Point{pos["B"].x + 65, pos["B"].y});
}

TEST_CASE("skip connection detours around the trunk") {
    const IRModel m = graph({"A", "B", "C", "D"}, {{"A", "B"}, {"B", "C"}, {"C", "D"}, {"A", "D"}});
    const auto pos = compute_layout(m);
    const auto paths = route_connections(m, pos);
    REQUIRE(paths.size() == 4);
    const auto& skip = paths[3];
    CHECK(skip.from == "A");
    CHECK(skip.points.size() > 2);
    CHECK(oracle::routing_violations(m, pos, paths, cfg).empty());
    // the detour runs through the gap between columns
    bool in_gap = false;
    for (const auto& p : skip.points) in_gap = in_gap || p.x == 130 + 30 || p.x == -30;
    CHECK(in_gap);
}

TEST_CASE("svg output") {
    const IRModel one = graph({"A"}, {}, LayerType::Accuracy);
    const auto pos = compute_layout(one);
    const std::string svg = layout_to_svg(one, pos, route_connections(one, pos));
    CHECK(count(svg, "<rect") == 1);
    CHECK(svg.find("fill=\"#f44336\"") != std::string::npos);
    CHECK(svg.rfind("<svg", 0) == 0);

    const auto* e = zoo::find("vgg16");
    const IRModel vgg = frontends::import_caffe(e->text).model;
    const auto vp = compute_layout(vgg);
    const std::string big = layout_to_svg(vgg, vp, route_connections(vgg, vp));
    CHECK(count(big, "<rect") == vgg.size());
    CHECK(vgg.size() >= 40);
    CHECK(count(big, "<polyline") == vgg.connections().size());
    // a plain chain: every layer in one column
    for (const auto& id : vp.order) CHECK(vp[id].x == 0);
}

TEST_CASE("svg escapes labels") {
    IRModel m("m");
    IRLayer l;
    l.id = "a<b&c";
    l.type = LayerType::ReLU;
    m.insert_layer(l);
    const auto pos = compute_layout(m);
    const std::string svg = layout_to_svg(m, pos, {});
    CHECK(svg.find("a&lt;b&amp;c") != std::string::npos);
    CHECK(svg.find("a<b") == std::string::npos);
}

TEST_CASE("json dump") {
    const IRModel m = graph({"A", "B"}, {{"A", "B"}});
    const auto pos = compute_layout(m);
    const auto j = layout_to_json(pos, route_connections(m, pos));
    CHECK(j.dump() == R"({"positions":{"A":[0.0,0.0],"B":[0.0,80.0]},"paths":[{"from":"A","to":"B","points":[[65.0,40.0],[65.0,80.0]]}]})");
}

TEST_CASE("fixtures satisfy the layout properties") {
    for (const auto& e : zoo::entries()) {
        CAPTURE(e.name);
        const IRModel m = frontends::import_model(e.text, e.framework).model;
        const auto pos = compute_layout(m);
        const auto paths = route_connections(m, pos);
        CHECK(oracle::layout_violations(m, pos, cfg).empty());
        CHECK(oracle::routing_violations(m, pos, paths, cfg).empty());
        CHECK(compute_layout(m) == pos);
    }
}

TEST_CASE("random DAGs satisfy the layout properties") {
    gen::Rng rng(31);
    for (int i = 0; i < 60; ++i) {
        const IRModel m = gen::random_dag(rng, {.nodes = 5 + i * 3, .extra_edge_rate = 0.4, .source_rate = 0.08});
        const auto pos = compute_layout(m);
        const auto paths = route_connections(m, pos);
        const auto v = oracle::layout_violations(m, pos, cfg);
        CHECK_MESSAGE(v.empty(), (v.empty() ? "" : v.front()));
        const auto r = oracle::routing_violations(m, pos, paths, cfg);
        CHECK_MESSAGE(r.empty(), (r.empty() ? "" : r.front()));
        CHECK(layout_to_svg(m, pos, paths) == layout_to_svg(m, compute_layout(m), route_connections(m, pos)));
    }
}

TEST_CASE("non-default config") {
    LayoutConfig c;
    c.layer_width = 100;
    c.layer_height = 30;
    c.hgap = 20;
    c.vgap = 10;
    c.overlap_step = 40;
    gen::Rng rng(32);
    for (int i = 0; i < 20; ++i) {
        const IRModel m = gen::random_dag(rng, {.nodes = 40, .extra_edge_rate = 0.5});
        const auto pos = compute_layout(m, c);
        CHECK(oracle::layout_violations(m, pos, c).empty());
        CHECK(oracle::routing_violations(m, pos, route_connections(m, pos, c), c).empty());
    }
}

}  // TEST_SUITE
