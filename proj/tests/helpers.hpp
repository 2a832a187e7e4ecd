#pragma once

#include <string>
#include <vector>

#include "lfopt/cost.hpp"
#include "lfopt/graph.hpp"
#include "lfopt/rng.hpp"

namespace lfopt::test {

// conv3x3(8x8x1, w=18) -> activation -> conv3x3(w=18), bpe 2.
inline CompGraph chain3() {
    CompGraph g;
    TensorSpec t{{1, 1, 8, 8}, 2};
    g.nodes = {
        {0, OpKind::conv, {3, 3}, 1, 1, 18, t},
        {1, OpKind::activation, {1, 1}, 1, 1, 0, t},
        {2, OpKind::conv, {3, 3}, 1, 1, 18, t},
    };
    g.edges = {{0, 1}, {1, 2}};
    g.graph_inputs = {{0, t}};
    g.graph_outputs = {2};
    g.finalize();
    return g;
}

// Chain of n conv3x3 nodes over 8x8x1 tensors, w=18 each.
inline CompGraph conv_chain(int n) {
    CompGraph g;
    TensorSpec t{{1, 1, 8, 8}, 2};
    for (int i = 0; i < n; ++i) g.nodes.push_back({i, OpKind::conv, {3, 3}, 1, 1, 18, t});
    for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1});
    g.graph_inputs = {{0, t}};
    g.graph_outputs = {n - 1};
    g.finalize();
    return g;
}

// 0 -> {1,2} -> 3 with activation at 0, convs at 1/2 (w=18), add at 3.
inline CompGraph diamond() {
    CompGraph g;
    TensorSpec t{{1, 1, 8, 8}, 2};
    g.nodes = {
        {0, OpKind::activation, {1, 1}, 1, 1, 0, t},
        {1, OpKind::conv, {3, 3}, 1, 1, 18, t},
        {2, OpKind::conv, {3, 3}, 1, 1, 18, t},
        {3, OpKind::add, {1, 1}, 1, 1, 0, t},
    };
    g.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    g.graph_inputs = {{0, t}};
    g.graph_outputs = {3};
    g.finalize();
    return g;
}

// Connected random DAG: spanning edge into every non-root node plus extras.
// Kinds rotate over conv/activation/add so weights and line costs vary.
inline CompGraph random_dag(int n, Rng& rng, double extra_edge_p = 0.25) {
    CompGraph g;
    for (int i = 0; i < n; ++i) {
        int64_t c = 1 + static_cast<int64_t>(rng.below(3));
        TensorSpec t{{1, c, 8, 8}, 2};
        switch (rng.below(3)) {
            case 0:
                g.nodes.push_back({i, OpKind::conv, {3, 3}, 1, 1,
                                   static_cast<uint64_t>(9 * c * 2), t});
                break;
            case 1:
                g.nodes.push_back({i, OpKind::activation, {1, 1}, 1, 1, 0, t});
                break;
            default:
                g.nodes.push_back({i, OpKind::add, {1, 1}, 1, 1, 0, t});
                break;
        }
    }
    for (int j = 1; j < n; ++j) {
        int i = static_cast<int>(rng.below(static_cast<uint64_t>(j)));
        g.edges.push_back({i, j});
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform01() < extra_edge_p / n) g.edges.push_back({i, j});
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    g.graph_inputs = {{0, g.nodes[0].output}};
    g.graph_outputs = {n - 1};
    g.finalize();
    return g;
}

inline FusionGroup whole_graph_group(const CompGraph& g) {
    std::vector<int> all(static_cast<size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) all[static_cast<size_t>(i)] = i;
    return FusionGroup::make(g, all);
}

inline std::vector<int> all_nodes(const CompGraph& g) {
    std::vector<int> all(static_cast<size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) all[static_cast<size_t>(i)] = i;
    return all;
}

} // namespace lfopt::test
