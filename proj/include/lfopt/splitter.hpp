#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <variant>

#include "lfopt/cost.hpp"
#include "lfopt/cutset.hpp"
#include "lfopt/explanation.hpp"

namespace lfopt {

// Result of recursively splitting an invalid fusion group: a set of valid
// groups covering the original members.
struct SplitOutcome {
    std::vector<FusionGroup> groups;
    uint64_t total_fd = 0;
    uint64_t fb_queries = 0; // raw cost evaluations spent producing this outcome
    uint64_t fd_queries = 0;
    int recursion_depth = 0;

    bool same_partition(const SplitOutcome& o) const;
};

// Memo of split results keyed by (parent graph, member set, beta). Entries
// are immutable once written; failures that do not depend on the remaining
// recursion depth are cached as Unsplittable markers.
class SplitMemo {
public:
    struct Failure {};
    using Entry = std::variant<SplitOutcome, Failure>;
    using Key = std::tuple<const CompGraph*, std::vector<int>, uint64_t>;

    std::optional<Entry> find(const FusionGroup& g, uint64_t beta) const {
        std::lock_guard lk(mu_);
        auto it = map_.find(Key{&g.parent(), g.members(), beta});
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void store(const FusionGroup& g, uint64_t beta, Entry e) {
        std::lock_guard lk(mu_);
        map_.emplace(Key{&g.parent(), g.members(), beta}, std::move(e));
    }
    size_t size() const {
        std::lock_guard lk(mu_);
        return map_.size();
    }

private:
    mutable std::mutex mu_;
    std::map<Key, Entry> map_;
};

// Recursive greedy tree-based splitting of an invalid group (the group's
// F_beta must be >= beta). Candidate cuts come from the explainer's edges;
// each is classified by how many halves fit the budget:
//   both valid      -> pick the one minimizing F_D(i)+F_D(j), done
//   exactly one     -> keep the largest valid half, recurse on the other
//   neither         -> recurse on both halves of every candidate, keep the
//                      cheapest combination
// Throws Unsplittable when no candidate exists (single-node group) and
// DepthExceeded past depth_limit.
SplitOutcome split(const FusionGroup& group, uint64_t beta, const CostModel& cost,
                   const Explainer& explainer, SplitMemo& memo, int depth_limit = 32);

} // namespace lfopt
