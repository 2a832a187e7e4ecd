#include "lfopt/explain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lfopt {

namespace {

int resolve_k(int requested, size_t edge_count) {
    if (requested <= 0) return default_k_select(edge_count);
    return static_cast<int>(std::min<size_t>(static_cast<size_t>(requested), edge_count));
}

// Ranks descending by score; equal scores fall back to the lower edge label so
// selection is deterministic.
Explanation rank_and_select(std::vector<ScoredEdge> scored, int k) {
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.edge < b.edge;
    });
    Explanation e;
    e.edges = std::move(scored);
    for (int i = 0; i < k && i < static_cast<int>(e.edges.size()); ++i)
        e.selected.push_back(e.edges[static_cast<size_t>(i)].edge);
    return e;
}

const std::vector<Edge>& require_internal_edges(const FusionGroup& g) {
    if (g.internal_edges().empty())
        throw NoInternalEdges("group of " + std::to_string(g.size()) + " node(s)");
    return g.internal_edges();
}

} // namespace

Explanation AnalyticExplainer::explain(const FusionGroup& g, uint64_t beta) const {
    const auto& internal = require_internal_edges(g);
    uint64_t whole = cost_->buffer_req(g);
    evals_.fetch_add(1, std::memory_order_relaxed);
    std::vector<ScoredEdge> scored;
    scored.reserve(internal.size());
    for (const auto& e : internal) {
        // Best split along this edge = the one minimizing the worse side.
        double best = -1.0;
        for (const auto& sol : cut_for_seed(g, e)) {
            auto halves = apply_split(g, sol);
            uint64_t hi = std::max(cost_->buffer_req(halves.first), cost_->buffer_req(halves.second));
            evals_.fetch_add(2, std::memory_order_relaxed);
            double score = static_cast<double>(whole) - static_cast<double>(hi);
            best = std::max(best, score);
        }
        // Edges with no connected split rank last.
        scored.push_back({e, best < 0 ? -1e300 : best});
    }
    (void)beta;
    return rank_and_select(std::move(scored), resolve_k(k_select_, internal.size()));
}

Explanation OcclusionExplainer::explain(const FusionGroup& g, uint64_t beta) const {
    const auto& internal = require_internal_edges(g);
    Eigen::MatrixXd features = featurize(g, beta);
    auto edges = local_edges(g);
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<int64_t>(edges.size()));
    double base = gnn_forward(*params_, features, edges, mask).probs[1];
    evals_.fetch_add(1, std::memory_order_relaxed);
    std::vector<ScoredEdge> scored;
    scored.reserve(internal.size());
    for (size_t i = 0; i < internal.size(); ++i) {
        Eigen::VectorXd m = mask;
        m[static_cast<int64_t>(i)] = 0.0;
        double occluded = gnn_forward(*params_, features, edges, m).probs[1];
        evals_.fetch_add(1, std::memory_order_relaxed);
        scored.push_back({internal[i], base - occluded});
    }
    return rank_and_select(std::move(scored), resolve_k(k_select_, internal.size()));
}

Explanation GnneExplainer::explain(const FusionGroup& g, uint64_t beta) const {
    const auto& internal = require_internal_edges(g);
    Eigen::MatrixXd features = featurize(g, beta);
    auto edges = local_edges(g);
    const int64_t m = static_cast<int64_t>(edges.size());

    // Explanations must not depend on call order, so the init noise is seeded
    // from the group identity.
    uint64_t h = hash_combine(seed_, beta);
    for (int v : g.members()) h = hash_combine(h, static_cast<uint64_t>(v));
    Rng rng(h);

    auto cache_full = gnn_forward(*params_, features, edges);
    evals_.fetch_add(1, std::memory_order_relaxed);
    const int target = cache_full.predicted;

    Eigen::VectorXd logits(m);
    for (int64_t i = 0; i < m; ++i) {
        double init = 0.5 + rng.uniform(-cfg_.init_noise, cfg_.init_noise);
        logits[i] = std::log(init / (1.0 - init));
    }

    Eigen::VectorXd mask(m);
    for (int step = 0; step < cfg_.steps; ++step) {
        mask = 1.0 / (1.0 + (-logits.array()).exp());
        auto cache = gnn_forward(*params_, features, edges, mask);
        auto grads = gnn_backward(*params_, cache, edges, target, /*want_param_grads=*/false);
        evals_.fetch_add(1, std::memory_order_relaxed);
        // d/dm of: CE(target | mask) + ls*sum(m) + le*sum(binary entropy(m))
        Eigen::VectorXd dmask = grads.mask;
        for (int64_t i = 0; i < m; ++i) {
            double mi = std::clamp(mask[i], 1e-9, 1.0 - 1e-9);
            dmask[i] += cfg_.lambda_sparsity + cfg_.lambda_entropy * std::log((1.0 - mi) / mi);
        }
        Eigen::VectorXd dlogits = dmask.array() * mask.array() * (1.0 - mask.array());
        logits -= cfg_.step_size * dlogits;
        if (!logits.allFinite()) throw NonFinite("gnne mask optimization diverged");
    }
    mask = 1.0 / (1.0 + (-logits.array()).exp());

    std::vector<ScoredEdge> scored;
    scored.reserve(internal.size());
    for (size_t i = 0; i < internal.size(); ++i)
        scored.push_back({internal[i], mask[static_cast<int64_t>(i)]});
    return rank_and_select(std::move(scored), resolve_k(cfg_.k_select, internal.size()));
}

double pg_edge_score(const PgParams& pg, const Eigen::MatrixXd& embeddings, int u, int v) {
    Eigen::VectorXd in(2 * kGnnHidden);
    in << embeddings.row(u).transpose(), embeddings.row(v).transpose();
    Eigen::VectorXd hidden = (pg.w1 * in + pg.b1).cwiseMax(0.0);
    return (pg.w2 * hidden)(0) + pg.b2;
}

Explanation PgExplainer::explain(const FusionGroup& g, uint64_t beta) const {
    const auto& internal = require_internal_edges(g);
    Eigen::MatrixXd emb = node_embeddings(*gnn_, g, beta); // one surrogate pass
    evals_.fetch_add(1, std::memory_order_relaxed);
    auto edges = local_edges(g);
    std::vector<ScoredEdge> scored;
    scored.reserve(internal.size());
    for (size_t i = 0; i < internal.size(); ++i) {
        auto [u, v] = edges[i];
        scored.push_back({internal[i], pg_edge_score(*pg_, emb, u, v)});
        evals_.fetch_add(1, std::memory_order_relaxed);
    }
    return rank_and_select(std::move(scored), resolve_k(k_select_, internal.size()));
}

std::pair<PgParams, PgTrainMetrics> pg_train_explain(const GnnParams& gnn, const Dataset& data,
                                                     Rng rng, int epochs) {
    // Training pairs: (endpoint embeddings, occlusion score) over every
    // analytically invalid multi-edge group in the dataset.
    struct Pair {
        Eigen::VectorXd in;
        double target;
    };
    std::vector<Pair> pairs;
    OcclusionExplainer occlusion(gnn, /*k_select=*/1);
    int groups_used = 0;
    for (const auto& s : data.samples) {
        if (s.valid || s.group.internal_edges().empty()) continue;
        Eigen::MatrixXd emb = node_embeddings(gnn, s.group, s.beta);
        Explanation ex = occlusion.explain(s.group, s.beta);
        auto edges = local_edges(s.group);
        const auto& internal = s.group.internal_edges();
        for (const auto& se : ex.edges) {
            size_t idx = static_cast<size_t>(
                std::lower_bound(internal.begin(), internal.end(), se.edge) - internal.begin());
            auto [u, v] = edges[idx];
            Eigen::VectorXd in(2 * kGnnHidden);
            in << emb.row(u).transpose(), emb.row(v).transpose();
            pairs.push_back({std::move(in), se.score});
        }
        ++groups_used;
    }
    if (groups_used < 100)
        throw DegenerateDataset("pg training needs >= 100 invalid groups, got " +
                                std::to_string(groups_used));

    PgParams params = PgParams::xavier(rng.derive("pg-init").next());
    Eigen::VectorXd flat = params.flatten();
    Adam opt(flat.size(), 1e-3);
    PgTrainMetrics metrics;
    metrics.training_groups = groups_used;
    std::vector<int> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng epoch_rng = rng.derive("pg-epochs");
    const int batch = 32;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        epoch_rng.shuffle(order);
        double total = 0.0;
        for (size_t at = 0; at < order.size(); at += batch) {
            size_t end = std::min(order.size(), at + batch);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(flat.size());
            PgParams cur = PgParams::unflatten(flat);
            for (size_t k = at; k < end; ++k) {
                const Pair& p = pairs[static_cast<size_t>(order[k])];
                Eigen::VectorXd pre = cur.w1 * p.in + cur.b1;
                Eigen::VectorXd hidden = pre.cwiseMax(0.0);
                double out = (cur.w2 * hidden)(0) + cur.b2;
                double err = out - p.target;
                total += err * err;
                // Squared loss backward.
                Eigen::VectorXd dhidden = err * 2.0 * cur.w2.transpose();
                dhidden = (pre.array() > 0.0).select(dhidden, 0.0);
                PgParams g = PgParams::zeros();
                g.w2 = err * 2.0 * hidden.transpose();
                g.b2 = err * 2.0;
                g.w1 = dhidden * p.in.transpose();
                g.b1 = dhidden;
                grad += g.flatten();
            }
            grad /= static_cast<double>(end - at);
            opt.step(flat, grad);
        }
        metrics.epoch_loss.push_back(total / static_cast<double>(pairs.size()));
    }
    return {PgParams::unflatten(flat), metrics};
}

std::string serialize_explanation(const Explanation& e) {
    std::ostringstream os;
    os << "i,j,score,selected\n";
    for (const auto& se : e.edges) {
        bool sel = std::find(e.selected.begin(), e.selected.end(), se.edge) != e.selected.end();
        os << se.edge.src << ',' << se.edge.dst << ',';
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", se.score);
        os << buf << ',' << (sel ? 1 : 0) << '\n';
    }
    return os.str();
}

} // namespace lfopt
