#pragma once

#include <atomic>
#include <memory>

#include "lfopt/cutset.hpp"
#include "lfopt/explanation.hpp"
#include "lfopt/surrogate.hpp"

namespace lfopt {

// Oracle baseline: scores each internal edge by how much the best split along
// it lowers the worst-side buffer requirement. Exact but scheme-specific; the
// learned explainers below exist because this does not generalize.
class AnalyticExplainer : public Explainer {
public:
    // k_select <= 0 selects the default min(6, |edges|); k_select = INT_MAX
    // selects every edge (used by oracle tests).
    explicit AnalyticExplainer(const CostModel& cost, int k_select = 0)
        : cost_(&cost), k_select_(k_select) {}

    std::string name() const override { return "analytic"; }
    Explanation explain(const FusionGroup& g, uint64_t beta) const override;
    uint64_t eval_count() const override { return evals_.load(); }

private:
    const CostModel* cost_;
    int k_select_;
    mutable std::atomic<uint64_t> evals_{0};
};

// Perturbation baseline over the surrogate: score = drop in p_invalid when a
// single edge's messages are removed.
class OcclusionExplainer : public Explainer {
public:
    OcclusionExplainer(const GnnParams& params, int k_select = 0)
        : params_(&params), k_select_(k_select) {}

    std::string name() const override { return "occlusion"; }
    Explanation explain(const FusionGroup& g, uint64_t beta) const override;
    uint64_t eval_count() const override { return evals_.load(); }

private:
    const GnnParams* params_;
    int k_select_;
    mutable std::atomic<uint64_t> evals_{0};
};

struct GnneConfig {
    int steps = 100;
    double step_size = 0.1;
    double lambda_sparsity = 0.005;
    double lambda_entropy = 0.1;
    int k_select = 0;            // <= 0: min(6, |edges|)
    double init_noise = 0.01;    // mask init 0.5 +- noise
};

// GNNExplainer-style soft edge mask optimized to keep the surrogate's
// prediction while staying sparse. Gradients flow analytically through the
// mask logits.
class GnneExplainer : public Explainer {
public:
    GnneExplainer(const GnnParams& params, GnneConfig cfg = {}, uint64_t seed = 0)
        : params_(&params), cfg_(cfg), seed_(seed) {}

    std::string name() const override { return "gnne"; }
    Explanation explain(const FusionGroup& g, uint64_t beta) const override;
    uint64_t eval_count() const override { return evals_.load(); }
    const GnneConfig& config() const { return cfg_; }

private:
    const GnnParams* params_;
    GnneConfig cfg_;
    uint64_t seed_;
    mutable std::atomic<uint64_t> evals_{0};
};

// Amortized scorer: a small MLP over concatenated endpoint embeddings
// regressed onto occlusion scores, one pass per edge at explain time.
class PgExplainer : public Explainer {
public:
    PgExplainer(const GnnParams& gnn, const PgParams& pg, int k_select = 0)
        : gnn_(&gnn), pg_(&pg), k_select_(k_select) {}

    std::string name() const override { return "pg"; }
    Explanation explain(const FusionGroup& g, uint64_t beta) const override;
    uint64_t eval_count() const override { return evals_.load(); }

private:
    const GnnParams* gnn_;
    const PgParams* pg_;
    int k_select_;
    mutable std::atomic<uint64_t> evals_{0};
};

struct PgTrainMetrics {
    std::vector<double> epoch_loss;
    int training_groups = 0;
};

// Trains the scorer on occlusion scores over the dataset's invalid groups
// (squared loss, 25 epochs). Throws DegenerateDataset below 100 such groups.
std::pair<PgParams, PgTrainMetrics> pg_train_explain(const GnnParams& gnn, const Dataset& data,
                                                     Rng rng, int epochs = 25);

double pg_edge_score(const PgParams& pg, const Eigen::MatrixXd& embeddings, int u, int v);

std::string serialize_explanation(const Explanation& e);

} // namespace lfopt
