#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfopt/cost.hpp"
#include "lfopt/graph.hpp"

namespace lfopt {

struct ScoredEdge {
    Edge edge;
    double score = 0.0;
};

// Ranked culprit edges of an invalid fusion group.
struct Explanation {
    std::vector<ScoredEdge> edges; // ranked descending by score
    std::vector<Edge> selected;    // top-k subset actually handed to the splitter
};

// An explainer maps (group, beta) to the edge set believed responsible for
// the group missing the buffer budget.
class Explainer {
public:
    virtual ~Explainer() = default;
    virtual std::string name() const = 0;
    virtual Explanation explain(const FusionGroup& g, uint64_t beta) const = 0;
    // Underlying model/cost evaluations, for efficiency comparisons.
    virtual uint64_t eval_count() const { return 0; }
};

inline int default_k_select(size_t edge_count) {
    return static_cast<int>(std::min<size_t>(6, edge_count));
}

} // namespace lfopt
