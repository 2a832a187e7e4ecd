#pragma once

#include <vector>

#include "lfopt/cost.hpp"
#include "lfopt/graph.hpp"

namespace lfopt {

// A directed edge-cut separating a fusion group into two weakly connected
// halves. All cut edges run side_i -> side_j; no internal edge runs back.
struct SplitSolution {
    std::vector<Edge> cut_edges; // sorted
    std::vector<int> side_i;     // sorted
    std::vector<int> side_j;     // sorted
    Edge seed_edge;
};

// The two reachability-closure candidates for a seed edge (i,j):
//   A: side_j = descendants of j inside the group, side_i = remainder
//   B: side_i = ancestors of i inside the group,   side_j = remainder
// Candidates whose sides are not both weakly connected are dropped;
// coinciding candidates collapse to one. 0-2 results.
std::vector<SplitSolution> cut_for_seed(const FusionGroup& g, Edge seed);

struct SolutionSet {
    std::vector<SplitSolution> solutions; // deduped, ascending by smallest cut edge
    int dropped_edges = 0;                // seeds outside the group's internal edges
};

// Union of cut_for_seed over the edge set, deduplicated by bipartition.
// Throws NoSolutions when nothing survives (e.g. a single-node group).
SolutionSet solutions_from_edges(const FusionGroup& g, const std::vector<Edge>& edges);

// Materializes the two halves. Throws StaleSolution if `s` does not
// bipartition `g`.
std::pair<FusionGroup, FusionGroup> apply_split(const FusionGroup& g, const SplitSolution& s);

} // namespace lfopt
