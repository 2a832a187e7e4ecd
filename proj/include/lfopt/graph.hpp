#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lfopt/errors.hpp"

namespace lfopt {

// Operation categories of a computational-graph node.
enum class OpKind {
    conv,
    dwconv,
    fc_matmul,
    pool_max,
    pool_avg,
    global_pool,
    activation,
    add,
    mul,
    concat,
    pad,
    softmax,
    resize,
    other,
};

constexpr int kNumOpKinds = 14;

std::string_view to_string(OpKind k);
OpKind op_kind_from_string(std::string_view s); // throws ParseError

inline bool is_weightless(OpKind k) {
    switch (k) {
        case OpKind::activation:
        case OpKind::add:
        case OpKind::mul:
        case OpKind::concat:
        case OpKind::pad:
        case OpKind::pool_max:
        case OpKind::pool_avg:
        case OpKind::resize:
            return true;
        default:
            return false;
    }
}

// Kinds that carry an explicit spatial kernel.
inline bool has_kernel(OpKind k) {
    return k == OpKind::conv || k == OpKind::dwconv || k == OpKind::pool_max ||
           k == OpKind::pool_avg;
}

// N,C,H,W tensor shape. N is always 1 (inference batch).
struct TensorSpec {
    std::array<int64_t, 4> dims{1, 1, 1, 1};
    int bytes_per_element = 2;

    int64_t channels() const { return dims[1]; }
    int64_t height() const { return dims[2]; }
    int64_t width() const { return dims[3]; }

    uint64_t bytes() const {
        uint64_t n = 1;
        for (auto d : dims) n *= static_cast<uint64_t>(d);
        return n * static_cast<uint64_t>(bytes_per_element);
    }

    void validate() const; // throws BadShape

    bool operator==(const TensorSpec&) const = default;
};

uint64_t tensor_bytes(const TensorSpec& t);

struct OpNode {
    int id = 0;
    OpKind kind = OpKind::other;
    std::pair<int, int> kernel_hw{1, 1}; // meaningful for conv/dwconv/pool only
    int stride = 1;
    int dilation = 1;
    uint64_t weight_bytes = 0;
    TensorSpec output;

    bool operator==(const OpNode&) const = default;
};

struct Edge {
    int src = 0;
    int dst = 0;

    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
};

// Topologically labeled DAG of operation nodes. Node ids are 0..n-1 and every
// edge (i,j) satisfies i < j. In-edges of a node keep declaration order, which
// fixes the input order of multi-input ops (concat/add).
struct CompGraph {
    std::vector<OpNode> nodes;                          // indexed by id
    std::vector<Edge> edges;                            // declaration order
    std::vector<std::pair<int, TensorSpec>> graph_inputs;
    std::vector<int> graph_outputs;

    int size() const { return static_cast<int>(nodes.size()); }

    const std::vector<int>& succ(int id) const { return succ_[static_cast<size_t>(id)]; }
    const std::vector<int>& pred(int id) const { return pred_[static_cast<size_t>(id)]; }

    bool has_edge(int i, int j) const;

    // Rebuilds adjacency and checks all invariants (throws on violation).
    void finalize();

    bool operator==(const CompGraph& o) const {
        return nodes == o.nodes && edges == o.edges && graph_inputs == o.graph_inputs &&
               graph_outputs == o.graph_outputs;
    }

private:
    std::vector<std::vector<int>> succ_, pred_;
};

enum class Direction { descendants, ancestors };

// Bijective relabeling so every edge ascends; incomparable nodes are ordered
// by original id ascending. Throws CycleError on a cyclic input.
CompGraph topo_relabel(const CompGraph& g);

// Reachability closure of `node` (inclusive) along the chosen direction.
std::vector<int> closure(const CompGraph& g, int node, Direction dir);

// True iff the undirected subgraph induced by `subset` is connected.
bool weakly_connected(const CompGraph& g, const std::vector<int>& subset);

// Weakly connected components of the induced subgraph, each sorted ascending,
// ordered by smallest member.
std::vector<std::vector<int>> weak_components(const CompGraph& g, const std::vector<int>& subset);

} // namespace lfopt
