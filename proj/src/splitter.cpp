#include "lfopt/splitter.hpp"

#include <algorithm>
#include <cassert>

namespace lfopt {

bool SplitOutcome::same_partition(const SplitOutcome& o) const {
    if (groups.size() != o.groups.size()) return false;
    std::vector<std::vector<int>> a, b;
    for (const auto& g : groups) a.push_back(g.members());
    for (const auto& g : o.groups) b.push_back(g.members());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

namespace {

struct Candidate {
    SplitSolution solution;
    FusionGroup side_i, side_j;
    uint64_t fb_i = 0, fb_j = 0;
    bool valid_i = false, valid_j = false;
};

SplitOutcome split_impl(const FusionGroup& group, uint64_t beta, const CostModel& cost,
                        const Explainer& explainer, SplitMemo& memo, int depth_left);

// Recursion wrapper for invalid halves produced by Cat-2/Cat-3 entries.
SplitOutcome recurse(const FusionGroup& half, uint64_t beta, const CostModel& cost,
                     const Explainer& explainer, SplitMemo& memo, int depth_left) {
    return split_impl(half, beta, cost, explainer, memo, depth_left - 1);
}

SplitOutcome compute(const FusionGroup& group, uint64_t beta, const CostModel& cost,
                     const Explainer& explainer, SplitMemo& memo, int depth_left) {
    Explanation expl;
    try {
        expl = explainer.explain(group, beta);
    } catch (const NoInternalEdges& e) {
        throw Unsplittable(e.what()); // single-node group: empty edge set
    }
    if (expl.selected.empty()) throw Unsplittable("explainer returned no edges");

    SolutionSet sols;
    try {
        sols = solutions_from_edges(group, expl.selected);
    } catch (const NoSolutions& e) {
        throw Unsplittable(e.what());
    }

    std::vector<Candidate> cat1, cat2, cat3;
    for (auto& s : sols.solutions) {
        Candidate c;
        auto halves = apply_split(group, s);
        c.side_i = std::move(halves.first);
        c.side_j = std::move(halves.second);
        c.fb_i = cost.buffer_req(c.side_i);
        c.fb_j = cost.buffer_req(c.side_j);
        c.valid_i = c.fb_i < beta;
        c.valid_j = c.fb_j < beta;
        c.solution = std::move(s);
        if (c.valid_i && c.valid_j)
            cat1.push_back(std::move(c));
        else if (c.valid_i || c.valid_j)
            cat2.push_back(std::move(c));
        else
            cat3.push_back(std::move(c));
    }

    // Category 1: both halves fit. Take the cheapest by combined DRAM cost and
    // stop; anything else would force three or more groups.
    if (!cat1.empty()) {
        const Candidate* best = nullptr;
        uint64_t best_fd = 0;
        for (const auto& c : cat1) {
            uint64_t fd = cost.dram_cost(c.side_i) + cost.dram_cost(c.side_j);
            if (!best || fd < best_fd || (fd == best_fd && c.solution.seed_edge < best->solution.seed_edge)) {
                best = &c;
                best_fd = fd;
            }
        }
        SplitOutcome out;
        out.groups = {best->side_i, best->side_j};
        out.total_fd = best_fd;
        out.recursion_depth = 1;
        return out;
    }

    // Category 2: keep the valid half with the most nodes (ties: lowest max
    // member label), recurse on the invalid one.
    if (!cat2.empty()) {
        const Candidate* best = nullptr;
        auto valid_half = [](const Candidate& c) -> const FusionGroup& {
            return c.valid_i ? c.side_i : c.side_j;
        };
        for (const auto& c : cat2) {
            if (!best) {
                best = &c;
                continue;
            }
            int nb = valid_half(*best).size(), nc = valid_half(c).size();
            if (nc > nb ||
                (nc == nb && valid_half(c).members().back() < valid_half(*best).members().back()))
                best = &c;
        }
        const FusionGroup& keep = valid_half(*best);
        const FusionGroup& rest = best->valid_i ? best->side_j : best->side_i;
        SplitOutcome rec = recurse(rest, beta, cost, explainer, memo, depth_left);
        SplitOutcome out;
        out.groups.push_back(keep);
        out.groups.insert(out.groups.end(), rec.groups.begin(), rec.groups.end());
        out.total_fd = cost.dram_cost(keep) + rec.total_fd;
        out.recursion_depth = 1 + rec.recursion_depth;
        return out;
    }

    // Category 3: both halves invalid everywhere. Recurse on both halves of
    // every candidate and keep the cheapest combination.
    const Candidate* best = nullptr;
    SplitOutcome best_i, best_j;
    uint64_t best_fd = 0;
    bool saw_depth_failure = false;
    for (const auto& c : cat3) {
        try {
            SplitOutcome ri = recurse(c.side_i, beta, cost, explainer, memo, depth_left);
            SplitOutcome rj = recurse(c.side_j, beta, cost, explainer, memo, depth_left);
            uint64_t fd = ri.total_fd + rj.total_fd;
            if (!best || fd < best_fd || (fd == best_fd && c.solution.seed_edge < best->solution.seed_edge)) {
                best = &c;
                best_fd = fd;
                best_i = std::move(ri);
                best_j = std::move(rj);
            }
        } catch (const DepthExceeded&) {
            saw_depth_failure = true;
        } catch (const Unsplittable&) {
        }
    }
    if (!best) {
        if (saw_depth_failure) throw DepthExceeded("all worst-case candidates hit the depth limit");
        throw Unsplittable("no worst-case candidate could be fully split");
    }
    SplitOutcome out;
    out.groups = best_i.groups;
    out.groups.insert(out.groups.end(), best_j.groups.begin(), best_j.groups.end());
    out.total_fd = best_fd;
    out.recursion_depth = 1 + std::max(best_i.recursion_depth, best_j.recursion_depth);
    return out;
}

SplitOutcome split_impl(const FusionGroup& group, uint64_t beta, const CostModel& cost,
                        const Explainer& explainer, SplitMemo& memo, int depth_left) {
    if (auto hit = memo.find(group, beta)) {
        if (std::holds_alternative<SplitMemo::Failure>(*hit))
            throw Unsplittable("memoized failure");
        return std::get<SplitOutcome>(*hit);
    }
    if (depth_left <= 0) throw DepthExceeded("split recursion limit");

    uint64_t fb0 = cost.fb_queries(), fd0 = cost.fd_queries();
    try {
        SplitOutcome out = compute(group, beta, cost, explainer, memo, depth_left);
        out.fb_queries = cost.fb_queries() - fb0;
        out.fd_queries = cost.fd_queries() - fd0;
        memo.store(group, beta, out);
        return out;
    } catch (const Unsplittable&) {
        // Depth-independent failure: safe to memoize.
        memo.store(group, beta, SplitMemo::Failure{});
        throw;
    }
    // DepthExceeded intentionally not memoized: it depends on the remaining
    // recursion budget of this particular call.
}

} // namespace

SplitOutcome split(const FusionGroup& group, uint64_t beta, const CostModel& cost,
                   const Explainer& explainer, SplitMemo& memo, int depth_limit) {
    assert(depth_limit >= 1);
    assert(cost.buffer_req(group) >= beta && "split() expects an invalid group");
    return split_impl(group, beta, cost, explainer, memo, depth_limit);
}

} // namespace lfopt
