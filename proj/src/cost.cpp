#include "lfopt/cost.hpp"

#include <algorithm>
#include <map>
#include <queue>

namespace lfopt {

std::string_view to_string(Scheme s) { return s == Scheme::LBDF ? "lbdf" : "brr"; }

Scheme scheme_from_string(std::string_view s) {
    if (s == "lbdf" || s == "LBDF") return Scheme::LBDF;
    if (s == "brr" || s == "BRR") return Scheme::BRR;
    throw ParseError("unknown fusion scheme '" + std::string(s) + "'");
}

FusionGroup FusionGroup::make(const CompGraph& parent, std::vector<int> members) {
    if (members.empty()) throw EmptyGroup("fusion group must be nonempty");
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    FusionGroup g;
    g.parent_ = &parent;
    g.in_.assign(static_cast<size_t>(parent.size()), 0);
    for (int m : members) {
        if (m < 0 || m >= parent.size()) throw UnknownNode("node " + std::to_string(m));
        g.in_[static_cast<size_t>(m)] = 1;
    }
    g.members_ = std::move(members);
    for (int m : g.members_)
        for (int s : parent.succ(m))
            if (g.in_[static_cast<size_t>(s)]) g.internal_.push_back({m, s});
    std::sort(g.internal_.begin(), g.internal_.end());
    if (!weakly_connected(parent, g.members_))
        throw DisconnectedGroup("group is not weakly connected");
    return g;
}

PartitionPlan PartitionPlan::make(const CompGraph& parent,
                                  std::vector<std::vector<int>> member_sets) {
    PartitionPlan p;
    p.parent = &parent;
    p.assignment.assign(static_cast<size_t>(parent.size()), -1);
    // Canonical group order: ascending smallest member.
    for (auto& ms : member_sets) std::sort(ms.begin(), ms.end());
    std::sort(member_sets.begin(), member_sets.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (auto& ms : member_sets) {
        int gi = static_cast<int>(p.groups.size());
        for (int m : ms) {
            if (m < 0 || m >= parent.size()) throw MalformedPlan("unknown node in plan");
            if (p.assignment[static_cast<size_t>(m)] != -1)
                throw MalformedPlan("node " + std::to_string(m) + " assigned twice");
            p.assignment[static_cast<size_t>(m)] = gi;
            p.covered.push_back(m);
        }
        try {
            p.groups.push_back(FusionGroup::make(parent, ms));
        } catch (const DisconnectedGroup& e) {
            throw MalformedPlan(e.what());
        } catch (const EmptyGroup& e) {
            throw MalformedPlan(e.what());
        }
    }
    std::sort(p.covered.begin(), p.covered.end());
    for (const auto& e : parent.edges) {
        int a = p.assignment[static_cast<size_t>(e.src)];
        int b = p.assignment[static_cast<size_t>(e.dst)];
        if (a != -1 && b != -1 && a != b) p.cross_edges.push_back(e);
    }
    if (!quotient_acyclic(p)) throw MalformedPlan("quotient graph has a cycle");
    return p;
}

bool quotient_acyclic(const PartitionPlan& p) {
    const int n = static_cast<int>(p.groups.size());
    std::vector<std::vector<int>> succ(static_cast<size_t>(n));
    std::vector<int> indeg(static_cast<size_t>(n), 0);
    std::map<std::pair<int, int>, bool> seen;
    for (const auto& e : p.cross_edges) {
        int a = p.group_of(e.src), b = p.group_of(e.dst);
        if (!seen.emplace(std::make_pair(a, b), true).second) continue;
        succ[static_cast<size_t>(a)].push_back(b);
        indeg[static_cast<size_t>(b)]++;
    }
    std::queue<int> q;
    for (int i = 0; i < n; ++i)
        if (indeg[static_cast<size_t>(i)] == 0) q.push(i);
    int done = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        ++done;
        for (int v : succ[static_cast<size_t>(u)])
            if (--indeg[static_cast<size_t>(v)] == 0) q.push(v);
    }
    return done == n;
}

namespace {

// Sliding-window rows a consumer holds of a consumed tensor.
int64_t rows_needed(const OpNode& consumer, const TensorSpec& t) {
    switch (consumer.kind) {
        case OpKind::conv:
        case OpKind::dwconv:
        case OpKind::pool_max:
        case OpKind::pool_avg:
            return static_cast<int64_t>(consumer.kernel_hw.first - 1) * consumer.dilation + 1;
        case OpKind::fc_matmul:
        case OpKind::global_pool:
        case OpKind::softmax:
            return t.height();
        default:
            return 1;
    }
}

uint64_t line_bytes(const TensorSpec& t, int64_t rows) {
    rows = std::min<int64_t>(rows, t.height());
    return static_cast<uint64_t>(rows) * static_cast<uint64_t>(t.width()) *
           static_cast<uint64_t>(t.channels()) * static_cast<uint64_t>(t.bytes_per_element);
}

// A tensor consumed by some group member. Produced either by a parent node
// (producer >= 0) or by a graph input feeding `input_node`.
struct ConsumedTensor {
    int producer;   // parent node id, or -1 for an external input
    int input_node; // meaningful when producer == -1
    TensorSpec spec;
    bool external() const { return producer < 0; }
};

// Enumerates distinct tensors consumed inside the group, with their in-group
// consumers. Deterministic order: external inputs by node id, then producers
// by id.
struct GroupTensors {
    std::vector<std::pair<ConsumedTensor, std::vector<int>>> consumed;
    std::vector<int> output_producers; // members whose output leaves the group

    GroupTensors(const FusionGroup& g) {
        const CompGraph& parent = g.parent();
        std::map<std::pair<int, int>, std::vector<int>> by_key; // (producer, input_node)
        for (int m : g.members()) {
            for (int pred : parent.pred(m)) by_key[{pred, -1}].push_back(m);
            for (const auto& [id, spec] : parent.graph_inputs)
                if (id == m) by_key[{-1, m}].push_back(m);
        }
        for (auto& [key, consumers] : by_key) {
            ConsumedTensor t;
            t.producer = key.first >= 0 && key.second == -1 ? key.first : -1;
            t.input_node = key.second;
            if (t.producer >= 0)
                t.spec = parent.nodes[static_cast<size_t>(t.producer)].output;
            else
                for (const auto& [id, spec] : parent.graph_inputs)
                    if (id == t.input_node) t.spec = spec;
            std::sort(consumers.begin(), consumers.end());
            consumers.erase(std::unique(consumers.begin(), consumers.end()), consumers.end());
            consumed.push_back({t, std::move(consumers)});
        }
        for (int m : g.members()) {
            bool leaves = false;
            for (int s : parent.succ(m)) leaves |= !g.contains(s);
            for (int out : parent.graph_outputs) leaves |= (out == m);
            if (leaves) output_producers.push_back(m);
        }
    }
};

uint64_t buffer_req_lbdf(const FusionGroup& g, const GroupTensors& gt) {
    const CompGraph& parent = g.parent();
    uint64_t total = 0;
    for (int m : g.members()) total += parent.nodes[static_cast<size_t>(m)].weight_bytes;
    for (const auto& [tensor, consumers] : gt.consumed) {
        int64_t rows = 0;
        for (int c : consumers)
            rows = std::max(rows, rows_needed(parent.nodes[static_cast<size_t>(c)], tensor.spec));
        total += line_bytes(tensor.spec, rows);
    }
    for (int m : gt.output_producers)
        total += line_bytes(parent.nodes[static_cast<size_t>(m)].output, 1);
    return total;
}

uint64_t buffer_req_brr(const FusionGroup& g, const GroupTensors& gt, const SchemeConfig& cfg) {
    const CompGraph& parent = g.parent();
    const auto& members = g.members(); // ascending label = schedule order
    std::vector<int> step_of(static_cast<size_t>(parent.size()), -1);
    for (size_t i = 0; i < members.size(); ++i)
        step_of[static_cast<size_t>(members[i])] = static_cast<int>(i);

    // Liveness interval [first, last] in schedule steps per consumed tensor;
    // group inputs are live from step 0. Member outputs without in-group
    // consumers are live at the producing step only.
    struct Live {
        int first, last;
        uint64_t bytes;
    };
    std::vector<Live> live;
    for (const auto& [tensor, consumers] : gt.consumed) {
        int first = tensor.external() || !g.contains(tensor.producer)
                        ? 0
                        : step_of[static_cast<size_t>(tensor.producer)];
        int last = first;
        for (int c : consumers) last = std::max(last, step_of[static_cast<size_t>(c)]);
        live.push_back({first, last, tensor.spec.bytes()});
    }
    for (int m : gt.output_producers) {
        bool consumed_inside = false;
        for (int s : parent.succ(m)) consumed_inside |= g.contains(s);
        if (!consumed_inside) {
            int st = step_of[static_cast<size_t>(m)];
            live.push_back({st, st, parent.nodes[static_cast<size_t>(m)].output.bytes()});
        }
    }

    uint64_t peak = 0;
    for (size_t step = 0; step < members.size(); ++step) {
        uint64_t here = std::min<uint64_t>(
            parent.nodes[static_cast<size_t>(members[step])].weight_bytes, cfg.brr_weight_tile_cap);
        for (const auto& lv : live)
            if (lv.first <= static_cast<int>(step) && static_cast<int>(step) <= lv.last)
                here += lv.bytes;
        peak = std::max(peak, here);
    }
    return peak;
}

} // namespace

uint64_t buffer_req(const FusionGroup& g, const SchemeConfig& cfg) {
    if (g.members().empty()) throw EmptyGroup("buffer_req");
    GroupTensors gt(g);
    return cfg.scheme == Scheme::LBDF ? buffer_req_lbdf(g, gt) : buffer_req_brr(g, gt, cfg);
}

uint64_t dram_cost(const FusionGroup& g, const SchemeConfig&) {
    if (g.members().empty()) throw EmptyGroup("dram_cost");
    const CompGraph& parent = g.parent();
    GroupTensors gt(g);
    uint64_t total = 0;
    for (const auto& [tensor, consumers] : gt.consumed)
        if (tensor.external() || !g.contains(tensor.producer)) total += tensor.spec.bytes();
    for (int m : gt.output_producers) total += parent.nodes[static_cast<size_t>(m)].output.bytes();
    for (int m : g.members()) total += parent.nodes[static_cast<size_t>(m)].weight_bytes;
    return total;
}

CostModel::CostModel(const CompGraph& g, SchemeConfig cfg, bool enable_cache)
    : graph_(&g), cfg_(cfg), cache_enabled_(enable_cache) {}

uint64_t CostModel::buffer_req(const FusionGroup& g) const {
    if (cache_enabled_) {
        std::lock_guard lk(mu_);
        auto it = fb_cache_.find(g.members());
        if (it != fb_cache_.end()) return it->second;
    }
    uint64_t v = lfopt::buffer_req(g, cfg_);
    fb_raw_.fetch_add(1, std::memory_order_relaxed);
    if (cache_enabled_) {
        std::lock_guard lk(mu_);
        fb_cache_.emplace(g.members(), v);
    }
    return v;
}

uint64_t CostModel::dram_cost(const FusionGroup& g) const {
    if (cache_enabled_) {
        std::lock_guard lk(mu_);
        auto it = fd_cache_.find(g.members());
        if (it != fd_cache_.end()) return it->second;
    }
    uint64_t v = lfopt::dram_cost(g, cfg_);
    fd_raw_.fetch_add(1, std::memory_order_relaxed);
    if (cache_enabled_) {
        std::lock_guard lk(mu_);
        fd_cache_.emplace(g.members(), v);
    }
    return v;
}

CostReport CostModel::evaluate_plan(const PartitionPlan& p, uint64_t beta) const {
    for (const auto& g : p.groups)
        if (&g.parent() != graph_) throw MalformedPlan("plan bound to a different graph");
    if (!quotient_acyclic(p)) throw MalformedPlan("quotient graph has a cycle");
    CostReport r;
    for (size_t i = 0; i < p.groups.size(); ++i) {
        GroupCost gc;
        gc.group_index = static_cast<int>(i);
        gc.fb_bytes = buffer_req(p.groups[i]);
        gc.fd_bytes = dram_cost(p.groups[i]);
        gc.valid = gc.fb_bytes < beta;
        r.dram_bytes += gc.fd_bytes;
        r.mbu_bytes = std::max(r.mbu_bytes, gc.fb_bytes);
        r.per_group.push_back(gc);
    }
    return r;
}

std::pair<std::vector<int>, std::vector<int>> CostModel::fuseable_filter(uint64_t beta) const {
    std::vector<int> fuseable, excluded;
    for (int i = 0; i < graph_->size(); ++i) {
        auto single = FusionGroup::make(*graph_, {i});
        if (buffer_req(single) >= beta)
            excluded.push_back(i);
        else
            fuseable.push_back(i);
    }
    return {fuseable, excluded};
}

} // namespace lfopt
