#include "lfopt/search.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <map>
#include <set>

namespace lfopt {

SearchAlgo search_algo_from_string(std::string_view s) {
    if (s == "rs" || s == "RS") return SearchAlgo::RS;
    if (s == "ls" || s == "LS") return SearchAlgo::LS;
    if (s == "nsga2" || s == "NSGA2") return SearchAlgo::NSGA2;
    throw ParseError("unknown search algorithm '" + std::string(s) + "'");
}

RectifierKind rectifier_from_string(std::string_view s) {
    if (s == "random" || s == "random_split") return RectifierKind::random_split;
    if (s == "explainer" || s == "explainer_guided") return RectifierKind::explainer_guided;
    throw ParseError("unknown rectifier '" + std::string(s) + "'");
}

std::string_view to_string(SearchAlgo a) {
    switch (a) {
        case SearchAlgo::RS: return "rs";
        case SearchAlgo::LS: return "ls";
        case SearchAlgo::NSGA2: return "nsga2";
    }
    return "?";
}

std::string_view to_string(RectifierKind r) {
    return r == RectifierKind::random_split ? "random" : "explainer";
}

namespace {

// Edges of the induced subgraph over `nodes`, ascending.
std::vector<Edge> induced_edges(const CompGraph& g, const std::vector<int>& nodes) {
    std::vector<char> in(static_cast<size_t>(g.size()), 0);
    for (int v : nodes) in[static_cast<size_t>(v)] = 1;
    std::vector<Edge> out;
    for (const auto& e : g.edges)
        if (in[static_cast<size_t>(e.src)] && in[static_cast<size_t>(e.dst)]) out.push_back(e);
    std::sort(out.begin(), out.end());
    return out;
}

// Deduplicated quotient adjacency (group index -> successor group indices).
std::vector<std::vector<int>> quotient_adjacency(const PartitionPlan& p) {
    std::vector<std::set<int>> adj(p.groups.size());
    for (const auto& e : p.cross_edges)
        adj[static_cast<size_t>(p.group_of(e.src))].insert(p.group_of(e.dst));
    std::vector<std::vector<int>> out(p.groups.size());
    for (size_t i = 0; i < adj.size(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
    return out;
}

// Merging groups a and b keeps the quotient acyclic iff neither reaches the
// other through a third group.
bool merge_legal(const PartitionPlan& p, const std::vector<std::vector<int>>& qadj, int a, int b) {
    for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
        std::vector<char> seen(p.groups.size(), 0);
        std::vector<int> stack;
        for (int s : qadj[static_cast<size_t>(from)])
            if (s != to && !seen[static_cast<size_t>(s)]) {
                seen[static_cast<size_t>(s)] = 1;
                stack.push_back(s);
            }
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            if (u == to) return false;
            for (int s : qadj[static_cast<size_t>(u)])
                if (!seen[static_cast<size_t>(s)]) {
                    seen[static_cast<size_t>(s)] = 1;
                    stack.push_back(s);
                }
        }
    }
    return true;
}

PartitionPlan merge_groups(const PartitionPlan& p, int a, int b) {
    std::vector<std::vector<int>> sets;
    std::vector<int> merged = p.groups[static_cast<size_t>(a)].members();
    const auto& bm = p.groups[static_cast<size_t>(b)].members();
    merged.insert(merged.end(), bm.begin(), bm.end());
    sets.push_back(std::move(merged));
    for (size_t i = 0; i < p.groups.size(); ++i)
        if (static_cast<int>(i) != a && static_cast<int>(i) != b)
            sets.push_back(p.groups[i].members());
    return PartitionPlan::make(*p.parent, std::move(sets));
}

} // namespace

PartitionPlan random_plan(const CompGraph& g, const std::vector<int>& nodes, Rng& rng) {
    if (nodes.empty()) throw Error("random_plan over empty node set");
    std::vector<std::vector<int>> singletons;
    singletons.reserve(nodes.size());
    for (int v : nodes) singletons.push_back({v});
    PartitionPlan plan = PartitionPlan::make(g, std::move(singletons));

    const size_t edge_count = induced_edges(g, nodes).size();
    const uint64_t merges = rng.below(edge_count + 1); // M ~ U[0, |E|]
    for (uint64_t m = 0; m < merges; ++m) {
        if (plan.cross_edges.empty()) break;
        const Edge& e = plan.cross_edges[rng.below(plan.cross_edges.size())];
        int a = plan.group_of(e.src), b = plan.group_of(e.dst);
        auto qadj = quotient_adjacency(plan);
        if (!merge_legal(plan, qadj, a, b)) continue; // rejected attempt
        plan = merge_groups(plan, a, b);
    }
    return plan;
}

namespace {

std::optional<PartitionPlan> try_merge_edit(const PartitionPlan& p, Rng& rng) {
    auto qadj = quotient_adjacency(p);
    std::vector<std::pair<int, int>> candidates;
    for (size_t a = 0; a < qadj.size(); ++a)
        for (int b : qadj[a])
            if (merge_legal(p, qadj, static_cast<int>(a), b))
                candidates.emplace_back(static_cast<int>(a), b);
    if (candidates.empty()) return std::nullopt;
    auto [a, b] = candidates[rng.below(candidates.size())];
    return merge_groups(p, a, b);
}

std::optional<PartitionPlan> try_split_edit(const PartitionPlan& p, Rng& rng) {
    std::vector<std::pair<int, Edge>> candidates; // (group index, seed edge)
    for (size_t gi = 0; gi < p.groups.size(); ++gi)
        for (const auto& e : p.groups[gi].internal_edges())
            candidates.emplace_back(static_cast<int>(gi), e);
    while (!candidates.empty()) {
        size_t pick = rng.below(candidates.size());
        auto [gi, seed] = candidates[pick];
        auto sols = cut_for_seed(p.groups[static_cast<size_t>(gi)], seed);
        if (sols.empty()) {
            candidates.erase(candidates.begin() + static_cast<int64_t>(pick));
            continue;
        }
        const SplitSolution& sol = sols[rng.below(sols.size())];
        std::vector<std::vector<int>> sets;
        for (size_t i = 0; i < p.groups.size(); ++i)
            if (static_cast<int>(i) != gi) sets.push_back(p.groups[i].members());
        sets.push_back(sol.side_i);
        sets.push_back(sol.side_j);
        // Splitting along a directed cut cannot create a quotient cycle.
        return PartitionPlan::make(*p.parent, std::move(sets));
    }
    return std::nullopt;
}

std::optional<PartitionPlan> try_move_edit(const PartitionPlan& p, Rng& rng) {
    std::vector<std::pair<int, int>> candidates; // (node to move, destination group)
    for (const auto& e : p.cross_edges) {
        if (p.groups[static_cast<size_t>(p.group_of(e.src))].size() > 1)
            candidates.emplace_back(e.src, p.group_of(e.dst));
        if (p.groups[static_cast<size_t>(p.group_of(e.dst))].size() > 1)
            candidates.emplace_back(e.dst, p.group_of(e.src));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    while (!candidates.empty()) {
        size_t pick = rng.below(candidates.size());
        auto [node, dst] = candidates[pick];
        int src_group = p.group_of(node);
        std::vector<std::vector<int>> sets;
        for (size_t i = 0; i < p.groups.size(); ++i) {
            std::vector<int> ms = p.groups[i].members();
            if (static_cast<int>(i) == src_group)
                ms.erase(std::remove(ms.begin(), ms.end(), node), ms.end());
            if (static_cast<int>(i) == dst) ms.push_back(node);
            if (!ms.empty()) sets.push_back(std::move(ms));
        }
        try {
            return PartitionPlan::make(*p.parent, std::move(sets)); // validates connectivity + quotient
        } catch (const MalformedPlan&) {
            candidates.erase(candidates.begin() + static_cast<int64_t>(pick));
        }
    }
    return std::nullopt;
}

} // namespace

PartitionPlan mutate(const PartitionPlan& p, Rng& rng) {
    const int first = static_cast<int>(rng.below(3));
    for (int k = 0; k < 3; ++k) {
        switch ((first + k) % 3) {
            case 0:
                if (auto r = try_merge_edit(p, rng)) return *r;
                break;
            case 1:
                if (auto r = try_split_edit(p, rng)) return *r;
                break;
            case 2:
                if (auto r = try_move_edit(p, rng)) return *r;
                break;
        }
    }
    throw Immutable("no legal edit (single-node search space)");
}

Genome encode_plan(const PartitionPlan& p) {
    Genome g;
    for (const auto& e : induced_edges(*p.parent, p.covered))
        g.cut.push_back(p.group_of(e.src) != p.group_of(e.dst) ? 1 : 0);
    return g;
}

namespace {

// Components over kept (non-cut) edges; isolated covered nodes become
// singletons.
std::vector<std::vector<int>> decode_components(const std::vector<Edge>& edges,
                                                const Genome& genome,
                                                const std::vector<int>& nodes, int graph_size) {
    std::vector<int> parent(static_cast<size_t>(graph_size));
    for (int v : nodes) parent[static_cast<size_t>(v)] = v;
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (size_t i = 0; i < edges.size(); ++i) {
        if (genome.cut[i]) continue;
        int a = find(edges[i].src), b = find(edges[i].dst);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }
    std::map<int, std::vector<int>> comps;
    for (int v : nodes) comps[find(v)].push_back(v);
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : comps) out.push_back(std::move(members));
    return out;
}

} // namespace

PartitionPlan decode_repair(const Genome& genome_in, const CompGraph& g,
                            const std::vector<int>& nodes, Genome* repaired_out) {
    const std::vector<Edge> edges = induced_edges(g, nodes);
    if (genome_in.cut.size() != edges.size())
        throw DimensionMismatch("genome length != induced edge count");
    Genome genome = genome_in;

    for (;;) {
        auto comps = decode_components(edges, genome, nodes, g.size());
        // Group index per node for the tentative decoding.
        std::vector<int> gi(static_cast<size_t>(g.size()), -1);
        for (size_t c = 0; c < comps.size(); ++c)
            for (int v : comps[c]) gi[static_cast<size_t>(v)] = static_cast<int>(c);

        // Tarjan-free SCC over the quotient via Kosaraju (small graphs).
        const int n = static_cast<int>(comps.size());
        std::vector<std::set<int>> succ(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
        for (const auto& e : edges) {
            int a = gi[static_cast<size_t>(e.src)], b = gi[static_cast<size_t>(e.dst)];
            if (a != b) {
                succ[static_cast<size_t>(a)].insert(b);
                pred[static_cast<size_t>(b)].insert(a);
            }
        }
        std::vector<int> order;
        std::vector<char> seen(static_cast<size_t>(n), 0);
        std::function<void(int)> dfs1 = [&](int u) {
            seen[static_cast<size_t>(u)] = 1;
            for (int v : succ[static_cast<size_t>(u)])
                if (!seen[static_cast<size_t>(v)]) dfs1(v);
            order.push_back(u);
        };
        for (int i = 0; i < n; ++i)
            if (!seen[static_cast<size_t>(i)]) dfs1(i);
        std::vector<int> comp_id(static_cast<size_t>(n), -1);
        int ncomp = 0;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (comp_id[static_cast<size_t>(*it)] != -1) continue;
            std::vector<int> stack{*it};
            comp_id[static_cast<size_t>(*it)] = ncomp;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (int v : pred[static_cast<size_t>(u)])
                    if (comp_id[static_cast<size_t>(v)] == -1) {
                        comp_id[static_cast<size_t>(v)] = ncomp;
                        stack.push_back(v);
                    }
            }
            ++ncomp;
        }
        std::vector<int> scc_size(static_cast<size_t>(ncomp), 0);
        for (int i = 0; i < n; ++i) scc_size[static_cast<size_t>(comp_id[static_cast<size_t>(i)])]++;

        // Cycle participants: groups inside a multi-group SCC. Cut their
        // highest-labeled kept internal edge and decode again.
        Edge worst{-1, -1};
        size_t worst_idx = 0;
        bool cyclic = false;
        for (size_t i = 0; i < edges.size(); ++i) {
            if (genome.cut[i]) continue;
            int a = gi[static_cast<size_t>(edges[i].src)];
            if (scc_size[static_cast<size_t>(comp_id[static_cast<size_t>(a)])] <= 1) continue;
            cyclic = true;
            if (worst.src < 0 || worst < edges[i]) {
                worst = edges[i];
                worst_idx = i;
            }
        }
        if (!cyclic) {
            if (repaired_out) *repaired_out = genome;
            return PartitionPlan::make(g, std::move(comps));
        }
        genome.cut[worst_idx] = 1;
    }
}

PartitionPlan crossover_repair(const Genome& a, const Genome& b, const CompGraph& g,
                               const std::vector<int>& nodes, Rng& rng, Genome* repaired_out) {
    if (a.cut.size() != b.cut.size()) throw DimensionMismatch("genome lengths differ");
    Genome child;
    child.cut.resize(a.cut.size());
    for (size_t i = 0; i < child.cut.size(); ++i) child.cut[i] = rng.coin(0.5) ? a.cut[i] : b.cut[i];
    if (!child.cut.empty()) {
        double flip_p = 1.0 / static_cast<double>(child.cut.size());
        for (size_t i = 0; i < child.cut.size(); ++i)
            if (rng.coin(flip_p)) child.cut[i] = !child.cut[i];
    }
    return decode_repair(child, g, nodes, repaired_out);
}

namespace {

// Random cutting until every fragment fits. Throws Unrectifiable when a
// single-node fragment is still invalid or no seed yields a connected cut.
std::vector<std::vector<int>> random_split_group(const FusionGroup& group, uint64_t beta,
                                                 const CostModel& cost, Rng& rng) {
    std::vector<std::vector<int>> work{group.members()}, done;
    while (!work.empty()) {
        std::vector<int> members = std::move(work.back());
        work.pop_back();
        FusionGroup frag = FusionGroup::make(group.parent(), members);
        if (cost.buffer_req(frag) < beta) {
            done.push_back(std::move(members));
            continue;
        }
        if (frag.size() == 1) throw Unrectifiable("single node exceeds the buffer budget");
        std::vector<Edge> seeds = frag.internal_edges();
        bool split_done = false;
        while (!seeds.empty()) {
            size_t pick = rng.below(seeds.size());
            auto sols = cut_for_seed(frag, seeds[pick]);
            if (sols.empty()) {
                seeds.erase(seeds.begin() + static_cast<int64_t>(pick));
                continue;
            }
            const SplitSolution& sol = sols[rng.below(sols.size())];
            work.push_back(sol.side_i);
            work.push_back(sol.side_j);
            split_done = true;
            break;
        }
        if (!split_done) throw Unrectifiable("no connected cut in invalid fragment");
    }
    return done;
}

} // namespace

PartitionPlan rectify(const PartitionPlan& p, uint64_t beta, const CostModel& cost,
                      RectifierKind kind, const Explainer* explainer, SplitMemo& memo, Rng& rng,
                      RectifyStats& stats, int depth_limit) {
    std::vector<std::vector<int>> sets;
    bool changed = false;
    for (const auto& group : p.groups) {
        if (cost.buffer_req(group) < beta) {
            sets.push_back(group.members());
            continue;
        }
        stats.attempts++;
        changed = true;
        if (kind == RectifierKind::explainer_guided) {
            if (explainer == nullptr) throw Error("explainer_guided rectifier needs an explainer");
            try {
                SplitOutcome out = split(group, beta, cost, *explainer, memo, depth_limit);
                stats.successes++;
                for (const auto& g2 : out.groups) sets.push_back(g2.members());
                continue;
            } catch (const Unsplittable&) {
            } catch (const DepthExceeded&) {
            }
            // Guided split failed: fall back to random cutting (not a success).
            auto frags = random_split_group(group, beta, cost, rng);
            sets.insert(sets.end(), frags.begin(), frags.end());
        } else {
            auto frags = random_split_group(group, beta, cost, rng);
            stats.successes++;
            sets.insert(sets.end(), frags.begin(), frags.end());
        }
    }
    if (!changed) return p;
    return PartitionPlan::make(*p.parent, std::move(sets));
}

namespace {

struct Evaluated {
    PartitionPlan plan;
    CostReport report;
    bool valid = false;
    int invalid_groups = 0;
};

struct RunContext {
    const CompGraph* graph;
    const CostModel* cost;
    uint64_t beta;
    const SearchConfig* cfg;
    const Explainer* explainer;
    const PlanObserver* observer;
    SplitMemo memo;
    Rng rect_rng;
    SearchTelemetry telemetry;
    std::optional<Evaluated> best;
    bool stop = false;

    int budget_left() const { return cfg->budget - telemetry.plans_evaluated; }

    // Rectify + evaluate one generated plan, charging one unit of budget.
    std::optional<Evaluated> consume(const PartitionPlan& pre) {
        if (*observer) (*observer)(pre);
        telemetry.plans_evaluated++;
        std::optional<Evaluated> out;
        RectifyStats stats;
        try {
            PartitionPlan plan = rectify(pre, beta, *cost, cfg->rectifier, explainer, memo,
                                         rect_rng, stats, cfg->split_depth_limit);
            Evaluated ev;
            ev.report = cost->evaluate_plan(plan, beta);
            ev.plan = std::move(plan);
            ev.valid = ev.report.all_valid();
            for (const auto& gc : ev.report.per_group) ev.invalid_groups += gc.valid ? 0 : 1;
            out = std::move(ev);
        } catch (const Unrectifiable&) {
            // Plan discarded; the budget unit is still spent.
        }
        telemetry.rectify_attempts += stats.attempts;
        telemetry.rectify_successes += stats.successes;
        if (out && out->valid) {
            if (!best || out->report.dram_bytes < best->report.dram_bytes) best = *out;
            if (cfg->stop_at_dram && best->report.dram_bytes <= *cfg->stop_at_dram) stop = true;
        }
        if (best) telemetry.best_dram_by_step.emplace_back(telemetry.plans_evaluated,
                                                           best->report.dram_bytes);
        return out;
    }
};

// Population ranking for LS: valid plans first, then DRAM, then smaller plans,
// then a canonical tiebreak so runs are reproducible.
bool ls_better(const Evaluated& a, const Evaluated& b) {
    if (a.valid != b.valid) return a.valid;
    if (!a.valid && a.invalid_groups != b.invalid_groups)
        return a.invalid_groups < b.invalid_groups;
    if (a.report.dram_bytes != b.report.dram_bytes) return a.report.dram_bytes < b.report.dram_bytes;
    if (a.plan.group_count() != b.plan.group_count())
        return a.plan.group_count() < b.plan.group_count();
    return a.plan.assignment < b.plan.assignment;
}

void run_rs(RunContext& ctx, const std::vector<int>& fuseable, Rng& gen_rng) {
    while (ctx.budget_left() > 0 && !ctx.stop)
        ctx.consume(random_plan(*ctx.graph, fuseable, gen_rng));
}

void run_ls(RunContext& ctx, const std::vector<int>& fuseable, Rng& gen_rng) {
    const int k = ctx.cfg->population_k;
    std::vector<Evaluated> population;
    while (static_cast<int>(population.size()) < k && ctx.budget_left() > 0 && !ctx.stop) {
        auto ev = ctx.consume(random_plan(*ctx.graph, fuseable, gen_rng));
        if (ev) population.push_back(std::move(*ev));
    }
    std::stable_sort(population.begin(), population.end(), ls_better);
    while (ctx.budget_left() > 0 && !ctx.stop) {
        std::vector<Evaluated> children;
        for (const auto& member : population) {
            if (ctx.budget_left() <= 0 || ctx.stop) break;
            PartitionPlan mutant = [&] {
                try {
                    return mutate(member.plan, gen_rng);
                } catch (const Immutable&) {
                    return member.plan; // single-node search space
                }
            }();
            auto ev = ctx.consume(mutant);
            if (ev) children.push_back(std::move(*ev));
        }
        population.insert(population.end(), std::make_move_iterator(children.begin()),
                          std::make_move_iterator(children.end()));
        std::stable_sort(population.begin(), population.end(), ls_better);
        // The population is the top-K distinct plans observed so far;
        // duplicates would collapse mutation diversity.
        population.erase(std::unique(population.begin(), population.end(),
                                     [](const Evaluated& a, const Evaluated& b) {
                                         return a.plan.assignment == b.plan.assignment;
                                     }),
                         population.end());
        if (static_cast<int>(population.size()) > k) population.resize(static_cast<size_t>(k));
        if (population.empty()) break;
    }
}

struct Individual {
    Genome genome;
    Evaluated eval;
    bool alive = false; // false when rectification failed
    int rank = 0;
    double crowding = 0.0;
};

// Constraint domination: feasible beats infeasible; infeasible compare by
// violation count; feasible compare by Pareto dominance on (dram, groups).
bool dominates(const Individual& a, const Individual& b) {
    if (!a.alive || !b.alive) return a.alive && !b.alive;
    if (a.eval.valid != b.eval.valid) return a.eval.valid;
    if (!a.eval.valid) return a.eval.invalid_groups < b.eval.invalid_groups;
    uint64_t ad = a.eval.report.dram_bytes, bd = b.eval.report.dram_bytes;
    size_t ag = a.eval.plan.group_count(), bg = b.eval.plan.group_count();
    return (ad <= bd && ag <= bg) && (ad < bd || ag < bg);
}

void nondominated_sort(std::vector<Individual>& pop) {
    const size_t n = pop.size();
    std::vector<std::vector<size_t>> dominated(n);
    std::vector<int> count(n, 0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(pop[i], pop[j]))
                dominated[i].push_back(j);
            else if (dominates(pop[j], pop[i]))
                count[i]++;
        }
    std::vector<size_t> front;
    for (size_t i = 0; i < n; ++i)
        if (count[i] == 0) {
            pop[i].rank = 0;
            front.push_back(i);
        }
    int rank = 0;
    while (!front.empty()) {
        std::vector<size_t> next;
        for (size_t i : front)
            for (size_t j : dominated[i])
                if (--count[j] == 0) {
                    pop[j].rank = rank + 1;
                    next.push_back(j);
                }
        // Crowding distance within this front over (dram, group count).
        for (int obj = 0; obj < 2; ++obj) {
            std::vector<size_t> order = front;
            auto key = [&](size_t i) -> double {
                if (!pop[i].alive) return 0.0;
                return obj == 0 ? static_cast<double>(pop[i].eval.report.dram_bytes)
                                : static_cast<double>(pop[i].eval.plan.group_count());
            };
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return key(a) < key(b); });
            if (order.size() > 1) {
                pop[order.front()].crowding = 1e30;
                pop[order.back()].crowding = 1e30;
                double span = key(order.back()) - key(order.front());
                if (span > 0)
                    for (size_t t = 1; t + 1 < order.size(); ++t)
                        pop[order[t]].crowding += (key(order[t + 1]) - key(order[t - 1])) / span;
            } else if (order.size() == 1) {
                pop[order.front()].crowding = 1e30;
            }
        }
        front = std::move(next);
        ++rank;
    }
}

void run_nsga2(RunContext& ctx, const std::vector<int>& fuseable, Rng& gen_rng) {
    const int k = ctx.cfg->population_k;
    auto eval_genome = [&](Genome genome) {
        Individual ind;
        Genome repaired;
        PartitionPlan decoded = decode_repair(genome, *ctx.graph, fuseable, &repaired);
        ind.genome = std::move(repaired);
        auto ev = ctx.consume(decoded);
        if (ev) {
            ind.eval = std::move(*ev);
            ind.alive = true;
        }
        return ind;
    };

    std::vector<Individual> pop;
    while (static_cast<int>(pop.size()) < k && ctx.budget_left() > 0 && !ctx.stop)
        pop.push_back(eval_genome(encode_plan(random_plan(*ctx.graph, fuseable, gen_rng))));
    nondominated_sort(pop);

    auto tournament = [&]() -> const Individual& {
        const Individual& a = pop[gen_rng.below(pop.size())];
        const Individual& b = pop[gen_rng.below(pop.size())];
        if (a.alive != b.alive) return a.alive ? a : b;
        if (a.eval.valid != b.eval.valid) return a.eval.valid ? a : b;
        if (!a.eval.valid && a.eval.invalid_groups != b.eval.invalid_groups)
            return a.eval.invalid_groups < b.eval.invalid_groups ? a : b;
        if (a.rank != b.rank) return a.rank < b.rank ? a : b;
        if (a.crowding != b.crowding) return a.crowding > b.crowding ? a : b;
        return a;
    };

    while (ctx.budget_left() > 0 && !ctx.stop && !pop.empty()) {
        std::vector<Individual> children;
        for (int c = 0; c < k && ctx.budget_left() > 0 && !ctx.stop; ++c) {
            const Individual& pa = tournament();
            const Individual& pb = tournament();
            Genome child_bits;
            crossover_repair(pa.genome, pb.genome, *ctx.graph, fuseable, gen_rng, &child_bits);
            children.push_back(eval_genome(std::move(child_bits)));
        }
        pop.insert(pop.end(), std::make_move_iterator(children.begin()),
                   std::make_move_iterator(children.end()));
        nondominated_sort(pop);
        std::stable_sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) {
            if (a.alive != b.alive) return a.alive;
            if (a.rank != b.rank) return a.rank < b.rank;
            return a.crowding > b.crowding;
        });
        if (static_cast<int>(pop.size()) > k) pop.resize(static_cast<size_t>(k));
    }
}

} // namespace

std::vector<FusionGroup> sample_invalid_corpus(const CompGraph& g, const CostModel& cost,
                                               uint64_t beta, int count, Rng rng) {
    auto [fuseable, excluded] = cost.fuseable_filter(beta);
    if (fuseable.size() < 2) throw Error("not enough fuseable nodes for a corpus");
    std::vector<FusionGroup> corpus;
    std::map<std::vector<int>, bool> seen;
    int stall = 0; // plans since the last new group
    while (static_cast<int>(corpus.size()) < count && stall < 2000) {
        PartitionPlan plan = random_plan(g, fuseable, rng);
        ++stall;
        for (const auto& grp : plan.groups) {
            if (grp.size() < 2 || static_cast<int>(corpus.size()) >= count) continue;
            if (cost.buffer_req(grp) < beta) continue;
            if (!seen.emplace(grp.members(), true).second) continue;
            corpus.push_back(grp);
            stall = 0;
        }
    }
    if (corpus.empty()) throw Error("no invalid multi-node groups at this buffer size");
    return corpus;
}

SearchResult run_search(const CompGraph& g, uint64_t beta, const SchemeConfig& scheme_cfg,
                        const SearchConfig& cfg, const Explainer* explainer,
                        const PlanObserver& observer) {
    if (cfg.budget < 1) throw Error("budget must be >= 1");
    auto t0 = std::chrono::steady_clock::now();

    CostModel cost(g, scheme_cfg);
    auto [fuseable, excluded] = cost.fuseable_filter(beta);
    if (fuseable.empty()) throw Error("no fuseable nodes at this buffer size");

    RunContext ctx;
    ctx.graph = &g;
    ctx.cost = &cost;
    ctx.beta = beta;
    ctx.cfg = &cfg;
    ctx.explainer = explainer;
    ctx.observer = &observer;
    Rng root(cfg.rng_seed);
    ctx.rect_rng = root.derive("rectify");
    Rng gen_rng = root.derive("plan-gen");

    if (cfg.rectifier == RectifierKind::explainer_guided && explainer == nullptr)
        throw Error("explainer_guided rectifier needs an explainer");

    // A single fuseable node has exactly one plan; avoid a degenerate loop.
    if (fuseable.size() == 1) {
        ctx.consume(PartitionPlan::make(g, {{fuseable}}));
    } else {
        switch (cfg.algorithm) {
            case SearchAlgo::RS: run_rs(ctx, fuseable, gen_rng); break;
            case SearchAlgo::LS: run_ls(ctx, fuseable, gen_rng); break;
            case SearchAlgo::NSGA2: run_nsga2(ctx, fuseable, gen_rng); break;
        }
    }

    if (!ctx.best)
        throw BudgetExhaustedNoValid("no valid plan in " +
                                     std::to_string(ctx.telemetry.plans_evaluated) + " plans");

    SearchResult result;
    result.fuseable = std::move(fuseable);
    result.excluded = std::move(excluded);
    result.best_plan = std::move(ctx.best->plan);
    result.best_report = std::move(ctx.best->report);
    ctx.telemetry.fb_queries = cost.fb_queries();
    ctx.telemetry.fd_queries = cost.fd_queries();
    ctx.telemetry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.telemetry = std::move(ctx.telemetry);
    return result;
}

} // namespace lfopt
