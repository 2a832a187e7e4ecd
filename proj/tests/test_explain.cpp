#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lfopt/explain.hpp"
#include "lfopt/fixtures.hpp"
#include "lfopt/splitter.hpp"

using namespace lfopt;

namespace {

const SchemeConfig kLbdf{Scheme::LBDF};

// One small surrogate shared by the statistical tests below; training runs
// once per process.
struct TrainedModel {
    Dataset data;
    GnnParams gnn;
    PgParams pg;
};

const TrainedModel& trained() {
    static TrainedModel* model = [] {
        auto* m = new TrainedModel();
        std::vector<uint64_t> betas{16 * 1024, 32 * 1024, 64 * 1024, 128 * 1024};
        m->data = sample_dataset({"se_branch_toy@56", "squeezenet@64"}, kLbdf, betas, 250, Rng(21));
        TrainConfig tc;
        tc.epochs = 12;
        auto [params, metrics] = train_evaluate(m->data, tc, Rng(22));
        m->gnn = params;
        auto [pg, pg_metrics] = pg_train_explain(params, m->data, Rng(23), /*epochs=*/10);
        m->pg = pg;
        return m;
    }();
    return *model;
}

// Invalid multi-edge groups from the shared dataset, distinct, up to `count`.
std::vector<std::pair<FusionGroup, uint64_t>> invalid_groups(int count, size_t min_edges = 2) {
    std::vector<std::pair<FusionGroup, uint64_t>> out;
    for (const auto& s : trained().data.samples) {
        if (s.valid || s.group.internal_edges().size() < min_edges) continue;
        bool dup = false;
        for (const auto& [g, b] : out) dup |= g.same_members(s.group) && &g.parent() == &s.group.parent();
        if (dup) continue;
        out.emplace_back(s.group, s.beta);
        if (static_cast<int>(out.size()) >= count) break;
    }
    return out;
}

double spearman(std::vector<double> a, std::vector<double> b) {
    auto ranks = [](std::vector<double> v) {
        std::vector<size_t> idx(v.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    auto ra = ranks(std::move(a)), rb = ranks(std::move(b));
    double n = static_cast<double>(ra.size());
    double ma = (n - 1) / 2, sa = 0, sb = 0, cov = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - ma);
        sa += (ra[i] - ma) * (ra[i] - ma);
        sb += (rb[i] - ma) * (rb[i] - ma);
    }
    if (sa == 0 || sb == 0) return 0.0;
    return cov / std::sqrt(sa * sb);
}

} // namespace

TEST_CASE("analytic explainer scores chain3 edges equally") {
    CompGraph g = test::chain3();
    CostModel cost(g, kLbdf);
    AnalyticExplainer expl(cost);
    FusionGroup whole = test::whole_graph_group(g);
    REQUIRE(cost.buffer_req(whole) == 164);
    Explanation ex = expl.explain(whole, 160);
    REQUIRE(ex.edges.size() == 2);
    CHECK(ex.edges[0].score == doctest::Approx(66.0)); // 164 - 98
    CHECK(ex.edges[1].score == doctest::Approx(66.0));
    CHECK(ex.selected.size() == 2);
    // ranking contract: scores descend
    for (size_t i = 1; i < ex.edges.size(); ++i) CHECK(ex.edges[i - 1].score >= ex.edges[i].score);
}

TEST_CASE("singleton groups raise NoInternalEdges") {
    CompGraph g = test::chain3();
    CostModel cost(g, kLbdf);
    AnalyticExplainer analytic(cost);
    GnnParams zeros = GnnParams::zeros();
    OcclusionExplainer occlusion(zeros);
    GnneExplainer gnne(zeros);
    FusionGroup single = FusionGroup::make(g, {1});
    CHECK_THROWS_AS(analytic.explain(single, 16), NoInternalEdges);
    CHECK_THROWS_AS(occlusion.explain(single, 16), NoInternalEdges);
    CHECK_THROWS_AS(gnne.explain(single, 16), NoInternalEdges);
}

TEST_CASE("untrained occlusion scores are zero and fall back to low labels") {
    CompGraph g = test::diamond();
    GnnParams zeros = GnnParams::zeros();
    OcclusionExplainer expl(zeros);
    FusionGroup whole = test::whole_graph_group(g);
    Explanation ex = expl.explain(whole, 1024);
    for (const auto& se : ex.edges) CHECK(se.score == doctest::Approx(0.0));
    // deterministic fallback: lowest-label edges first
    REQUIRE(ex.selected.size() == 4);
    CHECK(ex.selected[0] == Edge{0, 1});
    CHECK(ex.selected[1] == Edge{0, 2});
}

TEST_CASE("occlusion scores equal the two-forward difference") {
    const auto& m = trained();
    auto groups = invalid_groups(5);
    REQUIRE(!groups.empty());
    OcclusionExplainer expl(m.gnn);
    for (const auto& [grp, beta] : groups) {
        Explanation ex = expl.explain(grp, beta);
        const auto& internal = grp.internal_edges();
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<int64_t>(internal.size()));
        double base = forward_predict(m.gnn, grp, beta, ones).second;
        for (const auto& se : ex.edges) {
            size_t idx = static_cast<size_t>(
                std::lower_bound(internal.begin(), internal.end(), se.edge) - internal.begin());
            Eigen::VectorXd mask = ones;
            mask[static_cast<int64_t>(idx)] = 0.0;
            double occluded = forward_predict(m.gnn, grp, beta, mask).second;
            CHECK(se.score == doctest::Approx(base - occluded).epsilon(1e-9));
        }
    }
}

TEST_CASE("selected edges are always internal and deterministic") {
    const auto& m = trained();
    CostModel cost(*trained().data.graphs.front(), kLbdf);
    auto groups = invalid_groups(10);
    GnneExplainer gnne(m.gnn, GnneConfig{}, /*seed=*/3);
    OcclusionExplainer occ(m.gnn);
    PgExplainer pg(m.gnn, m.pg);
    for (const auto& [grp, beta] : groups) {
        for (const Explainer* e : std::initializer_list<const Explainer*>{&gnne, &occ, &pg}) {
            Explanation a = e->explain(grp, beta);
            Explanation b = e->explain(grp, beta);
            REQUIRE(a.selected.size() == b.selected.size());
            for (size_t i = 0; i < a.selected.size(); ++i) {
                CHECK(a.selected[i] == b.selected[i]);
                const auto& internal = grp.internal_edges();
                CHECK(std::binary_search(internal.begin(), internal.end(), a.selected[i]));
            }
        }
    }
}

TEST_CASE("gnne on a single-edge group selects that edge with a sane mask") {
    const auto& m = trained();
    auto groups = invalid_groups(3, /*min_edges=*/1);
    bool found = false;
    GnneExplainer gnne(m.gnn, GnneConfig{}, 5);
    for (const auto& [grp, beta] : groups) {
        if (grp.internal_edges().size() != 1) continue;
        Explanation ex = gnne.explain(grp, beta);
        REQUIRE(ex.selected.size() == 1);
        CHECK(ex.selected[0] == grp.internal_edges()[0]);
        found = true;
    }
    // mask values stay inside [0,1] (sigmoid parameterization)
    for (const auto& [grp, beta] : invalid_groups(5)) {
        Explanation ex = gnne.explain(grp, beta);
        for (const auto& se : ex.edges) {
            CHECK(se.score >= 0.0);
            CHECK(se.score <= 1.0);
        }
    }
    (void)found;
}

TEST_CASE("occlusion correlates positively with the analytic oracle") {
    const auto& m = trained();
    auto groups = invalid_groups(50);
    REQUIRE(groups.size() >= 20);
    double total = 0;
    int used = 0;
    for (const auto& [grp, beta] : groups) {
        CostModel cost(grp.parent(), kLbdf);
        AnalyticExplainer analytic(cost, /*k_select=*/1 << 20);
        OcclusionExplainer occ(m.gnn);
        Explanation oa = analytic.explain(grp, beta);
        Explanation oo = occ.explain(grp, beta);
        if (oa.edges.size() < 3) continue;
        std::map<Edge, double> occ_score;
        for (const auto& se : oo.edges) occ_score[se.edge] = se.score;
        std::vector<double> a, b;
        for (const auto& se : oa.edges) {
            a.push_back(se.score);
            b.push_back(occ_score.at(se.edge));
        }
        total += spearman(a, b);
        ++used;
    }
    REQUIRE(used >= 20);
    CHECK(total / used > 0.0); // mean rank correlation across invalid groups
}

TEST_CASE("gnne and occlusion agree on the top edge at least half the time") {
    const auto& m = trained();
    auto groups = invalid_groups(20);
    REQUIRE(groups.size() >= 10);
    GnneExplainer gnne(m.gnn, GnneConfig{}, 9);
    OcclusionExplainer occ(m.gnn);
    int agree = 0;
    for (const auto& [grp, beta] : groups) {
        Explanation a = gnne.explain(grp, beta);
        Explanation b = occ.explain(grp, beta);
        agree += (a.edges.front().edge == b.edges.front().edge) ? 1 : 0;
    }
    CHECK(agree * 2 >= static_cast<int>(groups.size()));
}

TEST_CASE("pg explains with one scorer pass per edge") {
    const auto& m = trained();
    auto groups = invalid_groups(5);
    REQUIRE(!groups.empty());
    for (const auto& [grp, beta] : groups) {
        PgExplainer pg(m.gnn, m.pg);
        Explanation ex = pg.explain(grp, beta);
        CHECK(ex.edges.size() == grp.internal_edges().size());
        // |edges| scorer passes + 1 surrogate embedding pass
        CHECK(pg.eval_count() == grp.internal_edges().size() + 1);

        GnneExplainer gnne(m.gnn, GnneConfig{}, 2);
        gnne.explain(grp, beta);
        CHECK(pg.eval_count() < gnne.eval_count()); // amortization pays off
    }
}

TEST_CASE("pg training loss decreases") {
    const auto& m = trained();
    auto [pg, metrics] = pg_train_explain(m.gnn, m.data, Rng(31), /*epochs=*/8);
    REQUIRE(metrics.epoch_loss.size() == 8);
    CHECK(metrics.epoch_loss.back() < metrics.epoch_loss.front());
    CHECK(metrics.training_groups >= 100);
}

TEST_CASE("pg training requires enough invalid groups") {
    const auto& m = trained();
    Dataset tiny;
    tiny.cfg = m.data.cfg;
    tiny.graphs = m.data.graphs;
    for (const auto& s : m.data.samples) {
        if (tiny.samples.size() >= 50) break;
        tiny.samples.push_back(s);
    }
    CHECK_THROWS_AS(pg_train_explain(m.gnn, tiny, Rng(1)), DegenerateDataset);
}

TEST_CASE("explanations serialize as edge CSV") {
    CompGraph g = test::chain3();
    CostModel cost(g, kLbdf);
    AnalyticExplainer expl(cost);
    Explanation ex = expl.explain(test::whole_graph_group(g), 160);
    std::string csv = serialize_explanation(ex);
    CHECK(csv.find("i,j,score,selected") == 0);
    CHECK(csv.find("0,1,") != std::string::npos);
    CHECK(csv.find("1,2,") != std::string::npos);
}

TEST_CASE("rectify rate over a fixed corpus is reproducible per explainer") {
    const auto& m = trained();
    auto groups = invalid_groups(30);
    REQUIRE(groups.size() >= 10);
    auto rate = [&](const Explainer& e) {
        int ok = 0;
        std::map<const CompGraph*, std::unique_ptr<CostModel>> models;
        SplitMemo memo;
        for (const auto& [grp, beta] : groups) {
            auto& cm = models[&grp.parent()];
            if (!cm) cm = std::make_unique<CostModel>(grp.parent(), kLbdf);
            try {
                split(grp, beta, *cm, e, memo);
                ++ok;
            } catch (const Error&) {
            }
        }
        return static_cast<double>(ok) / static_cast<double>(groups.size());
    };
    GnneExplainer gnne(m.gnn, GnneConfig{}, 11);
    double r1 = rate(gnne), r2 = rate(gnne);
    CHECK(r1 == r2);
    CHECK(r1 >= 0.0);
    CHECK(r1 <= 1.0);
}

TEST_CASE("analytic top-1 edge minimizes the worst-side buffer requirement") {
    // The top-ranked edge's best split is never worse (by max-side F_beta)
    // than any other single seed edge's best split; checked by exhaustive
    // seed enumeration with direct recomputation.
    int verified = 0;
    for (uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed * 3 + 1);
        CompGraph g = test::random_dag(5 + static_cast<int>(seed % 8), rng, 0.6);
        CostModel cost(g, kLbdf);
        FusionGroup whole = test::whole_graph_group(g);
        uint64_t fb = cost.buffer_req(whole);
        uint64_t beta = fb; // invalid (strict comparison)
        if (whole.internal_edges().size() < 2) continue;

        AnalyticExplainer expl(cost, /*k_select=*/1 << 20);
        Explanation ex = expl.explain(whole, beta);

        auto best_max_side = [&](const Edge& e) -> uint64_t {
            uint64_t best = ~uint64_t{0};
            for (const auto& s : cut_for_seed(whole, e)) {
                auto [a, b] = apply_split(whole, s);
                best = std::min(best, std::max(buffer_req(a, kLbdf), buffer_req(b, kLbdf)));
            }
            return best;
        };
        uint64_t top = best_max_side(ex.edges.front().edge);
        for (const auto& e : whole.internal_edges()) CHECK(top <= best_max_side(e));
        ++verified;
    }
    CHECK(verified >= 25);
}
