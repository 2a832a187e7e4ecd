#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lfopt/cost.hpp"
#include "lfopt/fixtures.hpp"
#include "lfopt/graph.hpp"
#include "lfopt/rng.hpp"

namespace lfopt {

// Per-node feature layout (length 21):
//   [0..13]  op kind one-hot
//   [14]     log2(1 + output bytes)
//   [15]     log2(1 + summed input bytes)
//   [16]     log2(1 + weight bytes)
//   [17,18]  kernel h, w
//   [19]     stride
//   [20]     log2(beta in bytes)
constexpr int kFeatureDim = 21;
constexpr int kGnnLayers = 4;
constexpr int kGnnHidden = 128;
constexpr int kGnnClasses = 2;

Eigen::MatrixXd featurize(const FusionGroup& g, uint64_t beta);

// Internal edges of the group in local (member-position) indices.
std::vector<std::pair<int, int>> local_edges(const FusionGroup& g);

// Message-passing binary validity classifier: 4 layers of
//   h'_v = relu(W_self h_v + sum_u mask(u,v) W_nbr h_u + b)
// over both edge directions, sum readout, 2-layer head, softmax.
struct GnnParams {
    struct Layer {
        Eigen::MatrixXd w_self; // out x in
        Eigen::MatrixXd w_nbr;  // out x in
        Eigen::VectorXd bias;   // out
    };
    std::vector<Layer> layers; // kGnnLayers entries
    Eigen::MatrixXd head_w1;   // hidden x hidden
    Eigen::VectorXd head_b1;
    Eigen::MatrixXd head_w2; // classes x hidden
    Eigen::VectorXd head_b2;

    static GnnParams zeros();
    static GnnParams xavier(uint64_t seed);

    int64_t param_count() const;
    Eigen::VectorXd flatten() const;
    static GnnParams unflatten(const Eigen::VectorXd& flat);
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> h;  // h[0] = features, h[l] = layer l output (n x dim)
    std::vector<Eigen::MatrixXd> ah; // masked-adjacency message input per layer
    Eigen::MatrixXd adj;             // symmetric masked adjacency (n x n)
    Eigen::VectorXd readout, head_hidden;
    Eigen::Vector2d logits, probs; // [valid, invalid]
    int predicted = 0;             // 0 = valid, 1 = invalid
};

// `edge_mask` must match local_edges(g) in length when present (throws
// DimensionMismatch); absent means all ones.
ForwardCache gnn_forward(const GnnParams& p, const Eigen::MatrixXd& features,
                         const std::vector<std::pair<int, int>>& edges,
                         const std::optional<Eigen::VectorXd>& edge_mask = std::nullopt);

std::pair<double, double> forward_predict(const GnnParams& p, const FusionGroup& g, uint64_t beta,
                                          const std::optional<Eigen::VectorXd>& edge_mask = std::nullopt);

// Final-layer node embeddings (n x hidden), full mask.
Eigen::MatrixXd node_embeddings(const GnnParams& p, const FusionGroup& g, uint64_t beta);

struct Gradients {
    GnnParams params;        // same shapes as the parameters
    Eigen::VectorXd mask;    // d loss / d edge_mask
    double loss = 0.0;
};

// Cross-entropy loss against `target` (0 valid / 1 invalid) and its gradient.
// Set want_param_grads=false to backprop only into the edge mask.
Gradients gnn_backward(const GnnParams& p, const ForwardCache& cache,
                       const std::vector<std::pair<int, int>>& edges, int target,
                       bool want_param_grads = true);

// A fusion group labeled with the analytic validity check at one budget.
struct LabeledGroup {
    FusionGroup group;
    std::string fixture; // name the group's parent graph can be rebuilt from
    uint64_t beta = 0;
    bool valid = false;
    Scheme scheme = Scheme::LBDF;
};

struct Dataset {
    SchemeConfig cfg;
    std::vector<std::shared_ptr<const CompGraph>> graphs;
    std::vector<LabeledGroup> samples;
};

// Buffer sizes used to multiply the sampled groups, in bytes.
std::vector<uint64_t> default_beta_set();

// Random-plan sampling across the fixtures until `target_distinct` distinct
// groups are collected; each group is crossed with every beta and labeled
// analytically.
Dataset sample_dataset(const std::vector<std::string>& fixture_names, SchemeConfig cfg,
                       const std::vector<uint64_t>& beta_set, int target_distinct, Rng rng);

std::string serialize_dataset(const Dataset& d);
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path, int bytes_per_element = 2);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double train_frac = 0.8, val_frac = 0.1; // remainder is test
};

struct TrainMetrics {
    double test_accuracy = 0.0;
    double test_f1 = 0.0; // macro over the two classes
    double f1_valid = 0.0, f1_invalid = 0.0;
    double best_val_accuracy = 0.0;
    int best_epoch = -1;
    std::vector<double> epoch_train_loss;
};

// Adam-trained classifier; returns the parameters with the best validation
// accuracy. Throws DegenerateDataset when only one class is present.
std::pair<GnnParams, TrainMetrics> train_evaluate(const Dataset& data, const TrainConfig& cfg,
                                                  Rng rng);

// PG-style amortized edge scorer on concatenated endpoint embeddings.
struct PgParams {
    Eigen::MatrixXd w1; // 64 x 256
    Eigen::VectorXd b1;
    Eigen::RowVectorXd w2; // 1 x 64
    double b2 = 0.0;

    static PgParams zeros();
    static PgParams xavier(uint64_t seed);
    Eigen::VectorXd flatten() const;
    static PgParams unflatten(const Eigen::VectorXd& flat);
};

// Checkpoint: little-endian float32 blocks with a short dimension header.
void save_checkpoint(const std::string& path, const GnnParams& gnn, const PgParams* pg = nullptr);
struct Checkpoint {
    GnnParams gnn;
    std::optional<PgParams> pg;
};
Checkpoint load_checkpoint(const std::string& path);

// Adam optimizer over a flat parameter vector.
class Adam {
public:
    Adam(int64_t n, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

private:
    double lr_, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
    Eigen::VectorXd m_, v_;
};

} // namespace lfopt
