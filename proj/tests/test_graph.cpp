#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "lfopt/fixtures.hpp"
#include "lfopt/graph_io.hpp"

using namespace lfopt;

TEST_CASE("parse a 0->1->2 chain") {
    const std::string text = R"(# simple chain
node 0 conv out=1,1,8,8 k=3x3 w=18
node 1 activation out=1,1,8,8
node 2 conv out=1,1,8,8 k=3x3 w=18
edge 0 1
edge 1 2
input 0 1,1,8,8
output 2
)";
    CompGraph g = parse_graph(text);
    CHECK(g.size() == 3);
    CHECK(g.edges.size() == 2);
    CHECK(g.nodes[0].weight_bytes == 18);
    CHECK(g.nodes[1].kind == OpKind::activation);
    CHECK(g.graph_inputs.size() == 1);
    CHECK(g.graph_outputs == std::vector<int>{2});
}

TEST_CASE("cycle in the input raises CycleError") {
    // Labels violate i<j, so they are re-derived; the 3-cycle survives any
    // relabeling and must be rejected.
    const std::string text = R"(
node 0 activation out=1,1,8,8
node 1 activation out=1,1,8,8
node 2 activation out=1,1,8,8
edge 0 1
edge 1 2
edge 2 0
input 0 1,1,8,8
output 2
)";
    CHECK_THROWS_AS(parse_graph(text), CycleError);
}

TEST_CASE("edge to an undeclared node raises DanglingEdge") {
    const std::string text = R"(
node 0 activation out=1,1,8,8
node 1 activation out=1,1,8,8
edge 0 9
input 0 1,1,8,8
output 1
)";
    CHECK_THROWS_AS(parse_graph(text), DanglingEdge);
}

TEST_CASE("non-positive dims raise BadShape") {
    CHECK_THROWS_AS(parse_graph("node 0 activation out=1,0,8,8\ninput 0 1,1,8,8\noutput 0\n"),
                    BadShape);
}

TEST_CASE("unknown keys raise ParseError") {
    CHECK_THROWS_AS(parse_graph("node 0 activation out=1,1,8,8 zz=3\ninput 0 1,1,8,8\noutput 0\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_graph("frob 0\n"), ParseError);
    // weights on a weightless op
    CHECK_THROWS_AS(parse_graph("node 0 add out=1,1,8,8 w=4\ninput 0 1,1,8,8\noutput 0\n"),
                    ParseError);
}

TEST_CASE("labels are re-derived when declared out of order") {
    // 2 -> 1 violates ascending labels but the graph is acyclic.
    const std::string text = R"(
node 0 activation out=1,1,8,8
node 1 activation out=1,1,8,8
node 2 activation out=1,1,8,8
edge 0 2
edge 2 1
input 0 1,1,8,8
output 1
)";
    CompGraph g = parse_graph(text);
    for (const auto& e : g.edges) CHECK(e.src < e.dst);
    CHECK(g.graph_outputs == std::vector<int>{2});
}

TEST_CASE("topo_relabel keeps an already-sorted chain") {
    CompGraph g = test::chain3();
    CompGraph r = topo_relabel(g);
    CHECK(r == g);
}

TEST_CASE("topo_relabel breaks incomparable ties by original id") {
    CompGraph g;
    TensorSpec t{{1, 1, 8, 8}, 2};
    for (int i = 0; i < 4; ++i) g.nodes.push_back({i, OpKind::activation, {1, 1}, 1, 1, 0, t});
    g.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    g.graph_inputs = {{0, t}};
    g.graph_outputs = {3};
    g.finalize();
    // Nodes 1 and 2 are incomparable; id-ascending order keeps the graph as is.
    CompGraph r = topo_relabel(g);
    CHECK(r == g);
}

TEST_CASE("topo_relabel yields ascending edges on random DAGs") {
    for (uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        CompGraph g = test::random_dag(6, rng);
        // Scramble labels by reversing them, then relabel.
        CompGraph scrambled;
        int n = g.size();
        scrambled.nodes.resize(static_cast<size_t>(n));
        for (const auto& nd : g.nodes) {
            OpNode copy = nd;
            copy.id = n - 1 - nd.id;
            scrambled.nodes[static_cast<size_t>(copy.id)] = copy;
        }
        for (const auto& e : g.edges) scrambled.edges.push_back({n - 1 - e.src, n - 1 - e.dst});
        for (const auto& [id, t] : g.graph_inputs)
            scrambled.graph_inputs.emplace_back(n - 1 - id, t);
        for (int id : g.graph_outputs) scrambled.graph_outputs.push_back(n - 1 - id);

        CompGraph r = topo_relabel(scrambled);
        REQUIRE(r.size() == n);
        for (const auto& e : r.edges) CHECK(e.src < e.dst); // exhaustive edge scan
    }
}

TEST_CASE("closure on chains and diamonds") {
    CompGraph chain = test::chain3();
    CHECK(closure(chain, 1, Direction::descendants) == std::vector<int>{1, 2});

    CompGraph d = test::diamond();
    CHECK(closure(d, 1, Direction::descendants) == std::vector<int>{1, 3});
    CHECK(closure(d, 3, Direction::ancestors) == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_AS(closure(d, 9, Direction::descendants), UnknownNode);
}

TEST_CASE("closure is idempotent") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        CompGraph g = test::random_dag(8, rng);
        for (int v = 0; v < g.size(); ++v) {
            for (auto dir : {Direction::descendants, Direction::ancestors}) {
                auto c = closure(g, v, dir);
                std::set<int> expanded;
                for (int u : c) {
                    auto c2 = closure(g, u, dir);
                    expanded.insert(c2.begin(), c2.end());
                }
                CHECK(std::vector<int>(expanded.begin(), expanded.end()) == c);
            }
        }
    }
}

TEST_CASE("weak connectivity of subsets") {
    CompGraph d = test::diamond();
    CHECK(weakly_connected(d, {0, 1, 3}));
    CHECK_FALSE(weakly_connected(d, {1, 2}));
    CHECK(weakly_connected(d, {2}));
    CHECK_THROWS_AS(weakly_connected(d, {}), EmptySubset);
}

TEST_CASE("vgg16 fixture matches the published layout") {
    CompGraph g = make_fixture(Arch::vgg16, 224);
    int weighted = 0;
    for (const auto& nd : g.nodes) weighted += nd.weight_bytes > 0 ? 1 : 0;
    CHECK(weighted == 16); // 13 convs + 3 fully connected
    CHECK(g.nodes[0].kind == OpKind::conv);
    CHECK(g.nodes[0].weight_bytes == 3 * 3 * 3 * 64 * 2); // = 3456
}

TEST_CASE("resnet18 fixture has one add per residual block") {
    CompGraph g = make_fixture(Arch::resnet18, 224);
    int adds = 0;
    for (const auto& nd : g.nodes) adds += nd.kind == OpKind::add ? 1 : 0;
    CHECK(adds == 8);
}

TEST_CASE("se_branch_toy contains the nested scale branch") {
    CompGraph g = make_fixture(Arch::se_branch_toy, 56);
    bool pool_feeds_fc = false;
    for (const auto& nd : g.nodes) {
        if (nd.kind != OpKind::global_pool) continue;
        for (int s : g.succ(nd.id))
            pool_feeds_fc |= g.nodes[static_cast<size_t>(s)].kind == OpKind::fc_matmul;
    }
    CHECK(pool_feeds_fc);
    bool mul_joins = false;
    for (const auto& nd : g.nodes) {
        if (nd.kind != OpKind::mul) continue;
        CHECK(g.pred(nd.id).size() == 2);
        mul_joins = true;
    }
    CHECK(mul_joins);
}

TEST_CASE("fixtures are deterministic") {
    for (Arch a : all_arches()) {
        int hw = a == Arch::se_branch_toy ? 56 : 224;
        std::string s1 = serialize_graph(make_fixture(a, hw));
        std::string s2 = serialize_graph(make_fixture(a, hw));
        CHECK(s1 == s2);
    }
    CHECK_THROWS_AS(make_fixture(Arch::vgg16, 8), UnsupportedArch);
}

TEST_CASE("serialize/parse round-trips") {
    for (Arch a : all_arches()) {
        int hw = a == Arch::se_branch_toy ? 56 : 224;
        CompGraph g = make_fixture(a, hw);
        CompGraph back = parse_graph(serialize_graph(g));
        CHECK(back == g);
    }
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        CompGraph g = test::random_dag(12, rng);
        CHECK(parse_graph(serialize_graph(g)) == g);
    }
}
