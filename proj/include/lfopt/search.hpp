#pragma once

#include <functional>
#include <optional>
#include <string>

#include "lfopt/cost.hpp"
#include "lfopt/explanation.hpp"
#include "lfopt/rng.hpp"
#include "lfopt/splitter.hpp"

namespace lfopt {

enum class SearchAlgo { RS, LS, NSGA2 };
enum class RectifierKind { random_split, explainer_guided };

SearchAlgo search_algo_from_string(std::string_view s);      // throws ParseError
RectifierKind rectifier_from_string(std::string_view s);     // throws ParseError
std::string_view to_string(SearchAlgo a);
std::string_view to_string(RectifierKind r);

struct SearchConfig {
    SearchAlgo algorithm = SearchAlgo::LS;
    int budget = 1000;      // number of generated partition plans
    int population_k = 10;
    uint64_t rng_seed = 0;
    RectifierKind rectifier = RectifierKind::random_split;
    std::string explainer_name = "analytic";
    int split_depth_limit = 32;
    // Optional early exit once a valid plan at or below this DRAM cost is
    // found; evaluated-plan accounting is unchanged.
    std::optional<uint64_t> stop_at_dram;
};

// One boolean per fuseable-subgraph edge (ascending edge order); true = cut.
struct Genome {
    std::vector<char> cut;
};

struct SearchTelemetry {
    std::vector<std::pair<int, uint64_t>> best_dram_by_step; // (1-based plan index, best dram)
    int plans_evaluated = 0;
    int rectify_attempts = 0;  // invalid groups handed to the rectifier
    int rectify_successes = 0; // groups fixed by the primary method (no fallback)
    uint64_t fb_queries = 0;   // raw cost-model evaluations during the run
    uint64_t fd_queries = 0;
    double wall_seconds = 0.0;

    double rectify_rate() const {
        return rectify_attempts == 0
                   ? 1.0
                   : static_cast<double>(rectify_successes) / static_cast<double>(rectify_attempts);
    }
};

struct SearchResult {
    PartitionPlan best_plan;
    CostReport best_report;
    SearchTelemetry telemetry;
    std::vector<int> fuseable, excluded; // buffer-feasibility filter outcome
};

// Merge-walk generator: starting from singletons over `nodes`, draws
// M ~ U[0, |edges|] and performs M random cross-edge merges, rejecting any
// merge that would create a quotient cycle.
PartitionPlan random_plan(const CompGraph& g, const std::vector<int>& nodes, Rng& rng);

// One random edit: merge two adjacent groups / split a multi-node group along
// a random cut / move one node across a cross edge. An edit kind without a
// legal instance falls through to the next in fixed order; throws Immutable
// when no edit exists at all.
PartitionPlan mutate(const PartitionPlan& p, Rng& rng);

// Uniform crossover + per-bit flip at 1/len, decoded as weakly connected
// components of kept edges; quotient cycles are repaired by cutting the
// highest-labeled internal edge of a cycle participant.
PartitionPlan crossover_repair(const Genome& a, const Genome& b, const CompGraph& g,
                               const std::vector<int>& nodes, Rng& rng,
                               Genome* repaired_out = nullptr);

Genome encode_plan(const PartitionPlan& p);
PartitionPlan decode_repair(const Genome& genome, const CompGraph& g,
                            const std::vector<int>& nodes, Genome* repaired_out = nullptr);

struct RectifyStats {
    int attempts = 0;
    int successes = 0;
};

// Replaces every invalid group: explainer_guided uses the recursive splitter
// (random fallback on Unsplittable/DepthExceeded); random_split cuts random
// internal edges until every fragment is valid. Throws Unrectifiable when a
// single invalid node remains.
PartitionPlan rectify(const PartitionPlan& p, uint64_t beta, const CostModel& cost,
                      RectifierKind kind, const Explainer* explainer, SplitMemo& memo,
                      Rng& rng, RectifyStats& stats, int depth_limit = 32);

// Invalid multi-node groups sampled from random plans over the fuseable
// subgraph at `beta` (so every member is individually feasible). Distinct by
// member set; deterministic under the rng.
std::vector<FusionGroup> sample_invalid_corpus(const CompGraph& g, const CostModel& cost,
                                               uint64_t beta, int count, Rng rng);

// Observer invoked with every candidate plan before rectification (tests use
// it to compare baseline/guided trajectories).
using PlanObserver = std::function<void(const PartitionPlan&)>;

SearchResult run_search(const CompGraph& g, uint64_t beta, const SchemeConfig& scheme_cfg,
                        const SearchConfig& cfg, const Explainer* explainer = nullptr,
                        const PlanObserver& observer = nullptr);

} // namespace lfopt
