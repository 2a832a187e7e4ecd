#include "lfopt/cutset.hpp"

#include <algorithm>
#include <optional>

namespace lfopt {

namespace {

// Closure of `start` inside the group along one direction.
std::vector<int> group_closure(const FusionGroup& g, int start, Direction dir) {
    const CompGraph& parent = g.parent();
    std::vector<char> seen(static_cast<size_t>(parent.size()), 0);
    std::vector<int> stack{start}, out;
    seen[static_cast<size_t>(start)] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        out.push_back(u);
        const auto& next = dir == Direction::descendants ? parent.succ(u) : parent.pred(u);
        for (int v : next) {
            if (g.contains(v) && !seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool subset_connected(const FusionGroup& g, const std::vector<int>& subset) {
    if (subset.empty()) return false;
    return weakly_connected(g.parent(), subset); // subset stays within the group by construction
}

// Builds the solution for a (side_i, side_j) bipartition; null when a side is
// empty, disconnected, or an internal edge runs side_j -> side_i.
std::optional<SplitSolution> make_solution(const FusionGroup& g, std::vector<int> side_i,
                                           std::vector<int> side_j, Edge seed) {
    if (side_i.empty() || side_j.empty()) return std::nullopt;
    std::vector<char> in_j(static_cast<size_t>(g.parent().size()), 0);
    for (int v : side_j) in_j[static_cast<size_t>(v)] = 1;
    SplitSolution s;
    for (const auto& e : g.internal_edges()) {
        bool src_j = in_j[static_cast<size_t>(e.src)];
        bool dst_j = in_j[static_cast<size_t>(e.dst)];
        if (src_j && !dst_j) return std::nullopt; // not a directed cut
        if (!src_j && dst_j) s.cut_edges.push_back(e);
    }
    // Connectivity is checked inside the group's subgraph minus the cut; since
    // the cut is exactly the crossing edge set, checking each side suffices.
    if (!subset_connected(g, side_i) || !subset_connected(g, side_j)) return std::nullopt;
    s.side_i = std::move(side_i);
    s.side_j = std::move(side_j);
    s.seed_edge = seed;
    return s;
}

std::vector<int> complement(const FusionGroup& g, const std::vector<int>& side) {
    std::vector<int> rest;
    std::set_difference(g.members().begin(), g.members().end(), side.begin(), side.end(),
                        std::back_inserter(rest));
    return rest;
}

} // namespace

std::vector<SplitSolution> cut_for_seed(const FusionGroup& g, Edge seed) {
    const auto& internal = g.internal_edges();
    if (!std::binary_search(internal.begin(), internal.end(), seed))
        throw NotInternalEdge("(" + std::to_string(seed.src) + "," + std::to_string(seed.dst) + ")");

    std::vector<SplitSolution> out;
    // Candidate A: everything j reaches goes to side_j.
    auto desc = group_closure(g, seed.dst, Direction::descendants);
    if (auto s = make_solution(g, complement(g, desc), desc, seed)) out.push_back(std::move(*s));
    // Candidate B: everything reaching i goes to side_i.
    auto anc = group_closure(g, seed.src, Direction::ancestors);
    if (auto s = make_solution(g, anc, complement(g, anc), seed)) {
        if (out.empty() || out.front().side_i != s->side_i) out.push_back(std::move(*s));
    }
    return out;
}

SolutionSet solutions_from_edges(const FusionGroup& g, const std::vector<Edge>& edges) {
    const auto& internal = g.internal_edges();
    SolutionSet set;
    std::vector<std::vector<int>> seen_bipartitions; // keyed by side_i (sides are complements)
    std::vector<Edge> seeds = edges;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    for (const auto& e : seeds) {
        if (!std::binary_search(internal.begin(), internal.end(), e)) {
            set.dropped_edges++;
            continue;
        }
        for (auto& s : cut_for_seed(g, e)) {
            bool dup = false;
            for (const auto& prev : seen_bipartitions) dup |= (prev == s.side_i);
            if (dup) continue;
            seen_bipartitions.push_back(s.side_i);
            set.solutions.push_back(std::move(s));
        }
    }
    if (set.solutions.empty())
        throw NoSolutions("no connected directed bipartition from " +
                          std::to_string(seeds.size()) + " seed(s)");
    std::sort(set.solutions.begin(), set.solutions.end(),
              [](const SplitSolution& a, const SplitSolution& b) {
                  if (a.cut_edges.front() != b.cut_edges.front())
                      return a.cut_edges.front() < b.cut_edges.front();
                  return a.side_i < b.side_i;
              });
    return set;
}

std::pair<FusionGroup, FusionGroup> apply_split(const FusionGroup& g, const SplitSolution& s) {
    std::vector<int> joined;
    std::merge(s.side_i.begin(), s.side_i.end(), s.side_j.begin(), s.side_j.end(),
               std::back_inserter(joined));
    if (joined != g.members()) throw StaleSolution("solution does not bipartition the group");
    return {FusionGroup::make(g.parent(), s.side_i), FusionGroup::make(g.parent(), s.side_j)};
}

} // namespace lfopt
