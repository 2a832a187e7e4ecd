#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lfopt/graph.hpp"

namespace lfopt {

enum class Scheme { LBDF, BRR };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s); // throws ParseError

struct SchemeConfig {
    Scheme scheme = Scheme::LBDF;
    int bytes_per_element = 2;
    uint64_t brr_weight_tile_cap = 16384; // bytes of weights resident per step

    bool operator==(const SchemeConfig&) const = default;
};

// Weakly connected node subset of a parent graph, executed as one fused unit.
class FusionGroup {
public:
    FusionGroup() = default;

    // Validates: nonempty, members exist, weakly connected in the parent.
    static FusionGroup make(const CompGraph& parent, std::vector<int> members);

    const CompGraph& parent() const { return *parent_; }
    const std::vector<int>& members() const { return members_; } // sorted
    const std::vector<Edge>& internal_edges() const { return internal_; } // sorted
    bool contains(int id) const {
        return id >= 0 && id < static_cast<int>(in_.size()) && in_[static_cast<size_t>(id)];
    }
    int size() const { return static_cast<int>(members_.size()); }

    bool same_members(const FusionGroup& o) const { return members_ == o.members_; }

private:
    const CompGraph* parent_ = nullptr;
    std::vector<int> members_;
    std::vector<Edge> internal_;
    std::vector<char> in_; // membership over parent node ids
};

// Disjoint cover of a node set by fusion groups with an acyclic quotient.
struct PartitionPlan {
    const CompGraph* parent = nullptr;
    std::vector<int> covered;          // all covered node ids, sorted
    std::vector<int> assignment;       // parent node id -> group index, -1 if uncovered
    std::vector<FusionGroup> groups;   // canonical order: ascending min member
    std::vector<Edge> cross_edges;     // parent edges between different groups

    // Builds the canonical plan and validates invariants (throws MalformedPlan).
    static PartitionPlan make(const CompGraph& parent, std::vector<std::vector<int>> member_sets);

    int group_of(int node) const { return assignment[static_cast<size_t>(node)]; }
    size_t group_count() const { return groups.size(); }

    bool operator==(const PartitionPlan& o) const {
        if (parent != o.parent || assignment != o.assignment) return false;
        return true;
    }
};

// True iff the quotient graph (groups as nodes) has no directed cycle.
bool quotient_acyclic(const PartitionPlan& p);

struct GroupCost {
    int group_index = 0;
    uint64_t fb_bytes = 0;
    uint64_t fd_bytes = 0;
    bool valid = false;
};

struct CostReport {
    uint64_t dram_bytes = 0; // sum of per-group F_D
    uint64_t mbu_bytes = 0;  // max per-group F_beta
    std::vector<GroupCost> per_group;

    bool all_valid() const {
        for (const auto& g : per_group)
            if (!g.valid) return false;
        return true;
    }
};

// Analytic cost functions (uncached reference forms).
//
// F_beta, LBDF: all member weights stay resident; every consumed tensor holds
// the consumer's sliding-window rows; each group output holds one row.
// F_beta, BRR: members execute in ascending label order with weights streamed
// in tiles; the peak over steps of live tensor bytes plus the current op's
// weight tile.
uint64_t buffer_req(const FusionGroup& g, const SchemeConfig& cfg);
// F_D: group inputs + group outputs + member weights, each tensor once.
uint64_t dram_cost(const FusionGroup& g, const SchemeConfig& cfg);

// Cached evaluator bound to one graph and scheme. The caches behave as a
// single logical map (thread-safe); raw evaluation counts are exposed so
// callers can verify memoization.
class CostModel {
public:
    CostModel(const CompGraph& g, SchemeConfig cfg, bool enable_cache = true);

    const CompGraph& graph() const { return *graph_; }
    const SchemeConfig& config() const { return cfg_; }

    uint64_t buffer_req(const FusionGroup& g) const;
    uint64_t dram_cost(const FusionGroup& g) const;
    bool valid(const FusionGroup& g, uint64_t beta) const { return buffer_req(g) < beta; }

    CostReport evaluate_plan(const PartitionPlan& p, uint64_t beta) const;

    // Nodes whose singleton group already misses the budget are excluded from
    // search. Returns (fuseable ids, excluded ids), both sorted.
    std::pair<std::vector<int>, std::vector<int>> fuseable_filter(uint64_t beta) const;

    uint64_t fb_queries() const { return fb_raw_.load(); }
    uint64_t fd_queries() const { return fd_raw_.load(); }

private:
    struct VecHash {
        size_t operator()(const std::vector<int>& v) const noexcept {
            uint64_t h = 0x9e3779b97f4a7c15ULL;
            for (int x : v) h = (h ^ static_cast<uint64_t>(x)) * 0x100000001b3ULL;
            return static_cast<size_t>(h);
        }
    };

    const CompGraph* graph_;
    SchemeConfig cfg_;
    bool cache_enabled_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::vector<int>, uint64_t, VecHash> fb_cache_, fd_cache_;
    mutable std::atomic<uint64_t> fb_raw_{0}, fd_raw_{0};
};

} // namespace lfopt
