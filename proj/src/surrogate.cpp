#include "lfopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "lfopt/search.hpp"

namespace lfopt {

namespace {

double log2p1(double x) { return std::log2(1.0 + x); }

Eigen::MatrixXd xavier_matrix(int64_t rows, int64_t cols, Rng& rng) {
    double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
    return m;
}

} // namespace

Eigen::MatrixXd featurize(const FusionGroup& g, uint64_t beta) {
    const CompGraph& parent = g.parent();
    const auto& members = g.members();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<int64_t>(members.size()), kFeatureDim);
    for (size_t i = 0; i < members.size(); ++i) {
        const OpNode& nd = parent.nodes[static_cast<size_t>(members[i])];
        auto row = x.row(static_cast<int64_t>(i));
        row[static_cast<int>(nd.kind)] = 1.0;
        row[14] = log2p1(static_cast<double>(nd.output.bytes()));
        uint64_t in_bytes = 0;
        for (int p : parent.pred(nd.id)) in_bytes += parent.nodes[static_cast<size_t>(p)].output.bytes();
        for (const auto& [id, spec] : parent.graph_inputs)
            if (id == nd.id) in_bytes += spec.bytes();
        row[15] = log2p1(static_cast<double>(in_bytes));
        row[16] = log2p1(static_cast<double>(nd.weight_bytes));
        row[17] = nd.kernel_hw.first;
        row[18] = nd.kernel_hw.second;
        row[19] = nd.stride;
        row[20] = std::log2(static_cast<double>(beta));
    }
    return x;
}

std::vector<std::pair<int, int>> local_edges(const FusionGroup& g) {
    const auto& members = g.members();
    std::vector<int> pos(static_cast<size_t>(g.parent().size()), -1);
    for (size_t i = 0; i < members.size(); ++i) pos[static_cast<size_t>(members[i])] = static_cast<int>(i);
    std::vector<std::pair<int, int>> out;
    out.reserve(g.internal_edges().size());
    for (const auto& e : g.internal_edges())
        out.emplace_back(pos[static_cast<size_t>(e.src)], pos[static_cast<size_t>(e.dst)]);
    return out;
}

GnnParams GnnParams::zeros() {
    GnnParams p;
    for (int l = 0; l < kGnnLayers; ++l) {
        int in = l == 0 ? kFeatureDim : kGnnHidden;
        p.layers.push_back({Eigen::MatrixXd::Zero(kGnnHidden, in),
                            Eigen::MatrixXd::Zero(kGnnHidden, in),
                            Eigen::VectorXd::Zero(kGnnHidden)});
    }
    p.head_w1 = Eigen::MatrixXd::Zero(kGnnHidden, kGnnHidden);
    p.head_b1 = Eigen::VectorXd::Zero(kGnnHidden);
    p.head_w2 = Eigen::MatrixXd::Zero(kGnnClasses, kGnnHidden);
    p.head_b2 = Eigen::VectorXd::Zero(kGnnClasses);
    return p;
}

GnnParams GnnParams::xavier(uint64_t seed) {
    Rng rng(seed);
    GnnParams p = zeros();
    for (auto& layer : p.layers) {
        layer.w_self = xavier_matrix(layer.w_self.rows(), layer.w_self.cols(), rng);
        layer.w_nbr = xavier_matrix(layer.w_nbr.rows(), layer.w_nbr.cols(), rng);
    }
    p.head_w1 = xavier_matrix(kGnnHidden, kGnnHidden, rng);
    p.head_w2 = xavier_matrix(kGnnClasses, kGnnHidden, rng);
    return p;
}

int64_t GnnParams::param_count() const {
    int64_t n = 0;
    for (const auto& l : layers) n += l.w_self.size() + l.w_nbr.size() + l.bias.size();
    return n + head_w1.size() + head_b1.size() + head_w2.size() + head_b2.size();
}

Eigen::VectorXd GnnParams::flatten() const {
    Eigen::VectorXd out(param_count());
    int64_t at = 0;
    auto put = [&](const Eigen::MatrixXd& m) {
        std::memcpy(out.data() + at, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
        at += m.size();
    };
    for (const auto& l : layers) {
        put(l.w_self);
        put(l.w_nbr);
        put(l.bias);
    }
    put(head_w1);
    put(head_b1);
    put(head_w2);
    put(head_b2);
    return out;
}

GnnParams GnnParams::unflatten(const Eigen::VectorXd& flat) {
    GnnParams p = zeros();
    int64_t at = 0;
    auto take = [&](Eigen::MatrixXd& m) {
        std::memcpy(m.data(), flat.data() + at, sizeof(double) * static_cast<size_t>(m.size()));
        at += m.size();
    };
    auto take_v = [&](Eigen::VectorXd& v) {
        std::memcpy(v.data(), flat.data() + at, sizeof(double) * static_cast<size_t>(v.size()));
        at += v.size();
    };
    for (auto& l : p.layers) {
        take(l.w_self);
        take(l.w_nbr);
        take_v(l.bias);
    }
    take(p.head_w1);
    take_v(p.head_b1);
    take(p.head_w2);
    take_v(p.head_b2);
    if (at != flat.size()) throw DimensionMismatch("flat parameter vector has wrong length");
    return p;
}

ForwardCache gnn_forward(const GnnParams& p, const Eigen::MatrixXd& features,
                         const std::vector<std::pair<int, int>>& edges,
                         const std::optional<Eigen::VectorXd>& edge_mask) {
    if (features.cols() != kFeatureDim) throw DimensionMismatch("feature dim");
    if (edge_mask && static_cast<size_t>(edge_mask->size()) != edges.size())
        throw DimensionMismatch("edge mask length " + std::to_string(edge_mask->size()) +
                                " != edge count " + std::to_string(edges.size()));
    const int64_t n = features.rows();
    ForwardCache c;
    c.adj = Eigen::MatrixXd::Zero(n, n);
    for (size_t e = 0; e < edges.size(); ++e) {
        double m = edge_mask ? (*edge_mask)[static_cast<int64_t>(e)] : 1.0;
        auto [u, v] = edges[e];
        c.adj(u, v) += m;
        c.adj(v, u) += m;
    }
    c.h.resize(kGnnLayers + 1);
    c.ah.resize(kGnnLayers);
    c.h[0] = features;
    for (int l = 0; l < kGnnLayers; ++l) {
        c.ah[static_cast<size_t>(l)] = c.adj * c.h[static_cast<size_t>(l)];
        Eigen::MatrixXd z = c.h[static_cast<size_t>(l)] * p.layers[static_cast<size_t>(l)].w_self.transpose() +
                            c.ah[static_cast<size_t>(l)] * p.layers[static_cast<size_t>(l)].w_nbr.transpose();
        z.rowwise() += p.layers[static_cast<size_t>(l)].bias.transpose();
        c.h[static_cast<size_t>(l) + 1] = z.cwiseMax(0.0);
    }
    c.readout = c.h[kGnnLayers].colwise().sum().transpose();
    c.head_hidden = (p.head_w1 * c.readout + p.head_b1).cwiseMax(0.0);
    c.logits = p.head_w2 * c.head_hidden + p.head_b2;
    double mx = c.logits.maxCoeff();
    Eigen::Vector2d ex = (c.logits.array() - mx).exp();
    c.probs = ex / ex.sum();
    c.predicted = c.probs[1] > c.probs[0] ? 1 : 0;
    return c;
}

std::pair<double, double> forward_predict(const GnnParams& p, const FusionGroup& g, uint64_t beta,
                                          const std::optional<Eigen::VectorXd>& edge_mask) {
    auto cache = gnn_forward(p, featurize(g, beta), local_edges(g), edge_mask);
    return {cache.probs[0], cache.probs[1]};
}

Eigen::MatrixXd node_embeddings(const GnnParams& p, const FusionGroup& g, uint64_t beta) {
    auto cache = gnn_forward(p, featurize(g, beta), local_edges(g));
    return cache.h[kGnnLayers];
}

Gradients gnn_backward(const GnnParams& p, const ForwardCache& c,
                       const std::vector<std::pair<int, int>>& edges, int target,
                       bool want_param_grads) {
    Gradients g;
    g.loss = -std::log(std::max(c.probs[target], 1e-300));
    if (want_param_grads) g.params = GnnParams::zeros();

    Eigen::Vector2d dlogits = c.probs;
    dlogits[target] -= 1.0;

    if (want_param_grads) {
        g.params.head_w2 = dlogits * c.head_hidden.transpose();
        g.params.head_b2 = dlogits;
    }
    Eigen::VectorXd dhid = p.head_w2.transpose() * dlogits;
    dhid = (c.head_hidden.array() > 0.0).select(dhid, 0.0);
    if (want_param_grads) {
        g.params.head_w1 = dhid * c.readout.transpose();
        g.params.head_b1 = dhid;
    }
    Eigen::VectorXd dreadout = p.head_w1.transpose() * dhid;

    // Sum readout broadcasts the gradient to every node embedding.
    const int64_t n = c.h[0].rows();
    Eigen::MatrixXd dh = dreadout.transpose().replicate(n, 1);

    g.mask = Eigen::VectorXd::Zero(static_cast<int64_t>(edges.size()));
    for (int l = kGnnLayers - 1; l >= 0; --l) {
        const auto& layer = p.layers[static_cast<size_t>(l)];
        const Eigen::MatrixXd& h_in = c.h[static_cast<size_t>(l)];
        Eigen::MatrixXd dz = (c.h[static_cast<size_t>(l) + 1].array() > 0.0).select(dh, 0.0);
        if (want_param_grads) {
            g.params.layers[static_cast<size_t>(l)].w_self = dz.transpose() * h_in;
            g.params.layers[static_cast<size_t>(l)].w_nbr = dz.transpose() * c.ah[static_cast<size_t>(l)];
            g.params.layers[static_cast<size_t>(l)].bias = dz.colwise().sum().transpose();
        }
        Eigen::MatrixXd dmsg = dz * layer.w_nbr; // gradient into A * h_in
        for (size_t e = 0; e < edges.size(); ++e) {
            auto [u, v] = edges[e];
            g.mask[static_cast<int64_t>(e)] +=
                dmsg.row(v).dot(h_in.row(u)) + dmsg.row(u).dot(h_in.row(v));
        }
        dh = dz * layer.w_self + c.adj.transpose() * dmsg;
    }
    return g;
}

std::vector<uint64_t> default_beta_set() {
    return {128ull * 1024, 256ull * 1024, 512ull * 1024, 1024ull * 1024, 2048ull * 1024};
}

Dataset sample_dataset(const std::vector<std::string>& fixture_names, SchemeConfig cfg,
                       const std::vector<uint64_t>& beta_set, int target_distinct, Rng rng) {
    Dataset d;
    d.cfg = cfg;
    struct Source {
        std::string name;
        std::shared_ptr<const CompGraph> graph;
        std::vector<int> all_nodes;
    };
    std::vector<Source> sources;
    for (const auto& name : fixture_names) {
        auto g = std::make_shared<CompGraph>(fixture_from_name(name, cfg.bytes_per_element));
        std::vector<int> all(static_cast<size_t>(g->size()));
        for (int i = 0; i < g->size(); ++i) all[static_cast<size_t>(i)] = i;
        d.graphs.push_back(g);
        sources.push_back({name, g, std::move(all)});
    }

    std::vector<std::pair<size_t, std::vector<int>>> distinct; // (source idx, members)
    std::map<std::pair<size_t, std::vector<int>>, bool> seen;
    Rng plan_rng = rng.derive("dataset-plans");
    size_t which = 0;
    int stall = 0; // plans since the last new distinct group
    while (static_cast<int>(distinct.size()) < target_distinct) {
        size_t src_idx = which;
        which = (which + 1) % sources.size();
        const Source& src = sources[src_idx];
        PartitionPlan plan = random_plan(*src.graph, src.all_nodes, plan_rng);
        ++stall;
        for (const auto& grp : plan.groups) {
            auto key = std::make_pair(src_idx, grp.members());
            if (seen.emplace(key, true).second) {
                distinct.push_back(key);
                stall = 0;
            }
        }
        if (stall > 20000)
            throw Error("distinct-group target unreachable: stuck at " +
                        std::to_string(distinct.size()) + "/" + std::to_string(target_distinct));
    }
    distinct.resize(static_cast<size_t>(target_distinct));

    for (const auto& [src_idx, members] : distinct) {
        const Source& src = sources[src_idx];
        FusionGroup grp = FusionGroup::make(*src.graph, members);
        uint64_t fb = buffer_req(grp, cfg);
        for (uint64_t beta : beta_set) {
            LabeledGroup lg;
            lg.group = grp;
            lg.fixture = src.name;
            lg.beta = beta;
            lg.valid = fb < beta;
            lg.scheme = cfg.scheme;
            d.samples.push_back(std::move(lg));
        }
    }
    return d;
}

std::string serialize_dataset(const Dataset& d) {
    std::ostringstream os;
    os << "# lfopt dataset v1\n";
    os << "# scheme=" << to_string(d.cfg.scheme) << " bpe=" << d.cfg.bytes_per_element
       << " tile_cap=" << d.cfg.brr_weight_tile_cap << "\n";
    for (const auto& s : d.samples) {
        os << s.fixture << ' ' << s.beta << ' ' << (s.valid ? 1 : 0);
        for (int m : s.group.members()) os << ' ' << m;
        os << '\n';
    }
    return os.str();
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    f << serialize_dataset(d);
}

Dataset load_dataset(const std::string& path, int bpe) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    Dataset d;
    d.cfg.bytes_per_element = bpe;
    std::map<std::string, std::shared_ptr<const CompGraph>> graphs;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("scheme=", 0) == 0) d.cfg.scheme = scheme_from_string(tok.substr(7));
                if (tok.rfind("bpe=", 0) == 0) d.cfg.bytes_per_element = std::stoi(tok.substr(4));
                if (tok.rfind("tile_cap=", 0) == 0)
                    d.cfg.brr_weight_tile_cap = std::stoull(tok.substr(9));
            }
            continue;
        }
        std::istringstream is(line);
        LabeledGroup s;
        int valid_flag = 0;
        if (!(is >> s.fixture >> s.beta >> valid_flag))
            throw ParseError("dataset line " + std::to_string(lineno));
        s.valid = valid_flag != 0;
        s.scheme = d.cfg.scheme;
        std::vector<int> members;
        int m;
        while (is >> m) members.push_back(m);
        auto it = graphs.find(s.fixture);
        if (it == graphs.end()) {
            auto g = std::make_shared<const CompGraph>(
                fixture_from_name(s.fixture, d.cfg.bytes_per_element));
            it = graphs.emplace(s.fixture, g).first;
            d.graphs.push_back(g);
        }
        s.group = FusionGroup::make(*it->second, std::move(members));
        d.samples.push_back(std::move(s));
    }
    if (d.samples.empty()) throw ParseError("empty dataset");
    return d;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

namespace {

struct PreparedSample {
    Eigen::MatrixXd features;
    std::vector<std::pair<int, int>> edges;
    int label; // 0 valid, 1 invalid
};

double accuracy(const GnnParams& p, const std::vector<PreparedSample>& set,
                const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    int hit = 0;
    for (int i : idx) {
        const auto& s = set[static_cast<size_t>(i)];
        auto c = gnn_forward(p, s.features, s.edges);
        hit += (c.predicted == s.label);
    }
    return static_cast<double>(hit) / static_cast<double>(idx.size());
}

} // namespace

std::pair<GnnParams, TrainMetrics> train_evaluate(const Dataset& data, const TrainConfig& cfg,
                                                  Rng rng) {
    if (data.samples.size() < 2) throw DegenerateDataset("need at least 2 samples");
    bool any_valid = false, any_invalid = false;
    for (const auto& s : data.samples) (s.valid ? any_valid : any_invalid) = true;
    if (!any_valid || !any_invalid) throw DegenerateDataset("both classes must be present");

    std::vector<PreparedSample> prepared;
    prepared.reserve(data.samples.size());
    for (const auto& s : data.samples)
        prepared.push_back({featurize(s.group, s.beta), local_edges(s.group), s.valid ? 0 : 1});

    std::vector<int> order(prepared.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng shuffle_rng = rng.derive("split");
    shuffle_rng.shuffle(order);
    size_t n_train = static_cast<size_t>(cfg.train_frac * static_cast<double>(order.size()));
    size_t n_val = static_cast<size_t>(cfg.val_frac * static_cast<double>(order.size()));
    std::vector<int> train_idx(order.begin(), order.begin() + static_cast<int64_t>(n_train));
    std::vector<int> val_idx(order.begin() + static_cast<int64_t>(n_train),
                             order.begin() + static_cast<int64_t>(n_train + n_val));
    std::vector<int> test_idx(order.begin() + static_cast<int64_t>(n_train + n_val), order.end());

    GnnParams params = GnnParams::xavier(rng.derive("init").next());
    Eigen::VectorXd flat = params.flatten();
    Adam opt(flat.size(), cfg.learning_rate);

    TrainMetrics metrics;
    GnnParams best = params;
    Rng epoch_rng = rng.derive("epochs");
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        epoch_rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        for (size_t at = 0; at < train_idx.size(); at += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(train_idx.size(), at + static_cast<size_t>(cfg.batch_size));
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(flat.size());
            for (size_t k = at; k < end; ++k) {
                const auto& s = prepared[static_cast<size_t>(train_idx[k])];
                auto cache = gnn_forward(params, s.features, s.edges);
                auto g = gnn_backward(params, cache, s.edges, s.label);
                grad += g.params.flatten();
                epoch_loss += g.loss;
            }
            grad /= static_cast<double>(end - at);
            opt.step(flat, grad);
            params = GnnParams::unflatten(flat);
        }
        metrics.epoch_train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
        double val_acc = accuracy(params, prepared, val_idx);
        if (val_acc > metrics.best_val_accuracy || metrics.best_epoch < 0) {
            metrics.best_val_accuracy = val_acc;
            metrics.best_epoch = epoch;
            best = params;
        }
    }

    // Test accuracy and per-class F1 with the best-validation parameters.
    int64_t tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
    int hit = 0;
    for (int i : test_idx) {
        const auto& s = prepared[static_cast<size_t>(i)];
        auto c = gnn_forward(best, s.features, s.edges);
        if (c.predicted == s.label) {
            ++hit;
            ++tp[s.label];
        } else {
            ++fp[c.predicted];
            ++fn[s.label];
        }
    }
    metrics.test_accuracy =
        test_idx.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(test_idx.size());
    auto f1 = [&](int cls) {
        double denom = 2.0 * static_cast<double>(tp[cls]) + static_cast<double>(fp[cls] + fn[cls]);
        return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[cls]) / denom;
    };
    metrics.f1_valid = f1(0);
    metrics.f1_invalid = f1(1);
    metrics.test_f1 = 0.5 * (metrics.f1_valid + metrics.f1_invalid);
    return {best, metrics};
}

PgParams PgParams::zeros() {
    PgParams p;
    p.w1 = Eigen::MatrixXd::Zero(64, 2 * kGnnHidden);
    p.b1 = Eigen::VectorXd::Zero(64);
    p.w2 = Eigen::RowVectorXd::Zero(64);
    p.b2 = 0.0;
    return p;
}

PgParams PgParams::xavier(uint64_t seed) {
    Rng rng(seed);
    PgParams p = zeros();
    p.w1 = xavier_matrix(64, 2 * kGnnHidden, rng);
    p.w2 = xavier_matrix(1, 64, rng);
    return p;
}

Eigen::VectorXd PgParams::flatten() const {
    Eigen::VectorXd out(w1.size() + b1.size() + w2.size() + 1);
    int64_t at = 0;
    std::memcpy(out.data(), w1.data(), sizeof(double) * static_cast<size_t>(w1.size()));
    at += w1.size();
    std::memcpy(out.data() + at, b1.data(), sizeof(double) * static_cast<size_t>(b1.size()));
    at += b1.size();
    std::memcpy(out.data() + at, w2.data(), sizeof(double) * static_cast<size_t>(w2.size()));
    at += w2.size();
    out[at] = b2;
    return out;
}

PgParams PgParams::unflatten(const Eigen::VectorXd& flat) {
    PgParams p = zeros();
    int64_t at = 0;
    std::memcpy(p.w1.data(), flat.data(), sizeof(double) * static_cast<size_t>(p.w1.size()));
    at += p.w1.size();
    std::memcpy(p.b1.data(), flat.data() + at, sizeof(double) * static_cast<size_t>(p.b1.size()));
    at += p.b1.size();
    std::memcpy(p.w2.data(), flat.data() + at, sizeof(double) * static_cast<size_t>(p.w2.size()));
    at += p.w2.size();
    p.b2 = flat[at];
    return p;
}

namespace {

constexpr uint32_t kCkptMagic = 0x4c46474eu; // "LFGN"

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_f32_block(std::ostream& os, const Eigen::VectorXd& v) {
    for (int64_t i = 0; i < v.size(); ++i) {
        float f = static_cast<float>(v[i]);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(os, bits);
    }
}

Eigen::VectorXd read_f32_block(std::istream& is, int64_t n) {
    Eigen::VectorXd v(n);
    for (int64_t i = 0; i < n; ++i) {
        uint32_t bits = read_u32(is);
        float f;
        std::memcpy(&f, &bits, 4);
        v[i] = static_cast<double>(f);
    }
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const GnnParams& gnn, const PgParams* pg) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    write_u32(f, kCkptMagic);
    write_u32(f, 1); // version
    write_u32(f, kGnnLayers);
    write_u32(f, kGnnHidden);
    write_u32(f, kFeatureDim);
    write_u32(f, kGnnClasses);
    write_u32(f, pg ? 1 : 0);
    write_f32_block(f, gnn.flatten());
    if (pg) write_f32_block(f, pg->flatten());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "'");
    if (read_u32(f) != kCkptMagic) throw ParseError("bad checkpoint magic");
    if (read_u32(f) != 1) throw ParseError("unsupported checkpoint version");
    if (read_u32(f) != kGnnLayers || read_u32(f) != kGnnHidden || read_u32(f) != kFeatureDim ||
        read_u32(f) != kGnnClasses)
        throw DimensionMismatch("checkpoint dims do not match this build");
    bool has_pg = read_u32(f) != 0;
    Checkpoint ck;
    GnnParams proto = GnnParams::zeros();
    ck.gnn = GnnParams::unflatten(read_f32_block(f, proto.param_count()));
    if (has_pg) {
        PgParams pproto = PgParams::zeros();
        ck.pg = PgParams::unflatten(read_f32_block(f, pproto.flatten().size()));
    }
    if (!f) throw ParseError("truncated checkpoint");
    return ck;
}

} // namespace lfopt
