#include "lfopt/graph.hpp"

#include <algorithm>
#include <queue>
#include <unordered_set>

namespace lfopt {

namespace {

constexpr std::string_view kOpNames[kNumOpKinds] = {
    "conv",      "dwconv", "fc_matmul", "pool_max", "pool_avg", "global_pool", "activation",
    "add",       "mul",    "concat",    "pad",      "softmax",  "resize",      "other",
};

} // namespace

std::string_view to_string(OpKind k) { return kOpNames[static_cast<int>(k)]; }

OpKind op_kind_from_string(std::string_view s) {
    for (int i = 0; i < kNumOpKinds; ++i)
        if (kOpNames[i] == s) return static_cast<OpKind>(i);
    throw ParseError("unknown op kind '" + std::string(s) + "'");
}

void TensorSpec::validate() const {
    if (dims[0] != 1) throw BadShape("batch dim must be 1");
    for (auto d : dims)
        if (d < 1) throw BadShape("non-positive tensor dim");
    if (bytes_per_element < 1) throw BadShape("non-positive bytes_per_element");
}

uint64_t tensor_bytes(const TensorSpec& t) { return t.bytes(); }

bool CompGraph::has_edge(int i, int j) const {
    const auto& s = succ(i);
    return std::find(s.begin(), s.end(), j) != s.end();
}

void CompGraph::finalize() {
    const int n = size();
    succ_.assign(static_cast<size_t>(n), {});
    pred_.assign(static_cast<size_t>(n), {});
    for (int i = 0; i < n; ++i) {
        if (nodes[static_cast<size_t>(i)].id != i)
            throw ParseError("node ids must be 0..n-1 in order");
        const auto& nd = nodes[static_cast<size_t>(i)];
        nd.output.validate();
        if (is_weightless(nd.kind) && nd.weight_bytes != 0)
            throw ParseError("weight bytes on weightless op " + std::string(to_string(nd.kind)));
        if (!has_kernel(nd.kind) && nd.kernel_hw != std::pair<int, int>{1, 1})
            throw ParseError("kernel on kernel-less op " + std::string(to_string(nd.kind)));
        if (nd.kernel_hw.first < 1 || nd.kernel_hw.second < 1 || nd.stride < 1 || nd.dilation < 1)
            throw BadShape("non-positive kernel/stride/dilation");
    }
    std::unordered_set<int64_t> seen;
    for (const auto& e : edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
            throw DanglingEdge("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                               ") references missing node");
        if (e.src >= e.dst)
            throw CycleError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                             ") violates ascending labels");
        if (!seen.insert(static_cast<int64_t>(e.src) * n + e.dst).second)
            throw ParseError("duplicate edge");
        succ_[static_cast<size_t>(e.src)].push_back(e.dst);
        pred_[static_cast<size_t>(e.dst)].push_back(e.src);
    }
    for (const auto& [id, t] : graph_inputs) {
        if (id < 0 || id >= n) throw DanglingEdge("graph input references missing node");
        t.validate();
    }
    for (int id : graph_outputs)
        if (id < 0 || id >= n) throw DanglingEdge("graph output references missing node");
    // Every node must be fed: either by an in-edge or by an external input.
    for (int i = 0; i < n; ++i) {
        if (!pred_[static_cast<size_t>(i)].empty()) continue;
        bool fed = false;
        for (const auto& [id, t] : graph_inputs) fed |= (id == i);
        if (!fed)
            throw ParseError("node " + std::to_string(i) + " has no inputs and is not a graph input");
    }
    if (n > 0) {
        std::vector<int> all(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
        if (!weakly_connected(*this, all)) throw ParseError("graph not weakly connected");
    }
}

CompGraph topo_relabel(const CompGraph& g) {
    // Works off the raw edge list: the input may violate the ascending-label
    // invariant (that is what this operation repairs).
    const int n = g.size();
    std::vector<int> indeg(static_cast<size_t>(n), 0);
    std::vector<std::vector<int>> succ(static_cast<size_t>(n));
    for (const auto& e : g.edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
            throw DanglingEdge("edge references missing node");
        if (e.src == e.dst) throw CycleError("self loop");
        indeg[static_cast<size_t>(e.dst)]++;
        succ[static_cast<size_t>(e.src)].push_back(e.dst);
    }

    // Kahn's algorithm with a min-heap on original id: incomparable nodes come
    // out in original-id order.
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[static_cast<size_t>(i)] == 0) ready.push(i);

    std::vector<int> new_id(static_cast<size_t>(n), -1);
    int next = 0;
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        new_id[static_cast<size_t>(u)] = next++;
        for (int v : succ[static_cast<size_t>(u)])
            if (--indeg[static_cast<size_t>(v)] == 0) ready.push(v);
    }
    if (next != n) throw CycleError("graph contains a cycle");

    CompGraph out;
    out.nodes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        OpNode nd = g.nodes[static_cast<size_t>(i)];
        nd.id = new_id[static_cast<size_t>(i)];
        out.nodes[static_cast<size_t>(nd.id)] = nd;
    }
    out.edges.reserve(g.edges.size());
    for (const auto& e : g.edges)
        out.edges.push_back({new_id[static_cast<size_t>(e.src)], new_id[static_cast<size_t>(e.dst)]});
    for (const auto& [id, t] : g.graph_inputs)
        out.graph_inputs.emplace_back(new_id[static_cast<size_t>(id)], t);
    for (int id : g.graph_outputs) out.graph_outputs.push_back(new_id[static_cast<size_t>(id)]);
    out.finalize();
    return out;
}

std::vector<int> closure(const CompGraph& g, int node, Direction dir) {
    if (node < 0 || node >= g.size()) throw UnknownNode("node " + std::to_string(node));
    std::vector<bool> seen(static_cast<size_t>(g.size()), false);
    std::vector<int> stack{node}, out;
    seen[static_cast<size_t>(node)] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        out.push_back(u);
        const auto& next = (dir == Direction::descendants) ? g.succ(u) : g.pred(u);
        for (int v : next) {
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool weakly_connected(const CompGraph& g, const std::vector<int>& subset) {
    if (subset.empty()) throw EmptySubset("weakly_connected over empty subset");
    std::vector<char> in(static_cast<size_t>(g.size()), 0), seen(static_cast<size_t>(g.size()), 0);
    for (int v : subset) {
        if (v < 0 || v >= g.size()) throw UnknownNode("node " + std::to_string(v));
        in[static_cast<size_t>(v)] = 1;
    }
    std::vector<int> stack{subset.front()};
    seen[static_cast<size_t>(subset.front())] = 1;
    size_t count = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++count;
        for (const auto* adj : {&g.succ(u), &g.pred(u)}) {
            for (int v : *adj) {
                if (in[static_cast<size_t>(v)] && !seen[static_cast<size_t>(v)]) {
                    seen[static_cast<size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    size_t distinct = 0;
    for (int v : subset)
        if (in[static_cast<size_t>(v)]) ++distinct; // subset may not repeat, but be safe
    return count == distinct;
}

std::vector<std::vector<int>> weak_components(const CompGraph& g, const std::vector<int>& subset) {
    std::vector<char> in(static_cast<size_t>(g.size()), 0), seen(static_cast<size_t>(g.size()), 0);
    for (int v : subset) in[static_cast<size_t>(v)] = 1;
    std::vector<std::vector<int>> comps;
    std::vector<int> order = subset;
    std::sort(order.begin(), order.end());
    for (int start : order) {
        if (seen[static_cast<size_t>(start)]) continue;
        std::vector<int> comp, stack{start};
        seen[static_cast<size_t>(start)] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (const auto* adj : {&g.succ(u), &g.pred(u)}) {
                for (int v : *adj) {
                    if (in[static_cast<size_t>(v)] && !seen[static_cast<size_t>(v)]) {
                        seen[static_cast<size_t>(v)] = 1;
                        stack.push_back(v);
                    }
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

} // namespace lfopt
