#include "lfopt/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <future>
#include <iostream>
#include <sstream>

#include "lfopt/explain.hpp"
#include "lfopt/fixtures.hpp"
#include "lfopt/graph_io.hpp"
#include "lfopt/report.hpp"
#include "lfopt/search.hpp"
#include "lfopt/splitter.hpp"
#include "lfopt/surrogate.hpp"

namespace lfopt {

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<uint64_t> parse_kb_list(const std::string& csv) {
    std::vector<uint64_t> out;
    for (const auto& tok : split_csv(csv)) out.push_back(std::stoull(tok) * 1024);
    if (out.empty()) throw Error("empty size list");
    return out;
}

CompGraph resolve_graph(const std::string& arch, const std::string& graph_path, int hw) {
    if (!graph_path.empty()) return load_graph(graph_path);
    return make_fixture(arch_from_string(arch), hw);
}

std::string graph_label(const std::string& arch, const std::string& graph_path, int hw) {
    if (!graph_path.empty()) return "file:" + graph_path;
    return fixture_name(arch_from_string(arch), hw);
}

struct ExplainerBundle {
    std::unique_ptr<Explainer> explainer;
    std::shared_ptr<Checkpoint> ckpt;
};

ExplainerBundle make_explainer(const std::string& name, const CostModel& cost,
                               const std::string& model_path, uint64_t seed) {
    ExplainerBundle b;
    if (name == "analytic") {
        b.explainer = std::make_unique<AnalyticExplainer>(cost);
        return b;
    }
    if (model_path.empty()) throw Error("explainer '" + name + "' needs --model");
    b.ckpt = std::make_shared<Checkpoint>(load_checkpoint(model_path));
    if (name == "occlusion") {
        b.explainer = std::make_unique<OcclusionExplainer>(b.ckpt->gnn);
    } else if (name == "gnne") {
        b.explainer = std::make_unique<GnneExplainer>(b.ckpt->gnn, GnneConfig{}, seed);
    } else if (name == "pg") {
        if (!b.ckpt->pg) throw Error("checkpoint has no pg scorer block (re-run train)");
        b.explainer = std::make_unique<PgExplainer>(b.ckpt->gnn, *b.ckpt->pg);
    } else {
        throw Error("unknown explainer '" + name + "'");
    }
    return b;
}

struct OptimizeOptions {
    std::string arch, graph_path, fusion = "lbdf", search = "ls", rectifier = "random",
                explainer = "analytic", model, out;
    int hw = 224;
    int buffer_kb = 128;
    int budget = 2000;
    int k = 10;
    uint64_t seed = 0;
};

SearchResult run_optimize(const CompGraph& graph, const OptimizeOptions& o) {
    SchemeConfig scheme{scheme_from_string(o.fusion)};
    SearchConfig sc;
    sc.algorithm = search_algo_from_string(o.search);
    sc.budget = o.budget;
    sc.population_k = o.k;
    sc.rng_seed = o.seed;
    sc.rectifier = rectifier_from_string(o.rectifier);
    sc.explainer_name = o.explainer;
    uint64_t beta = static_cast<uint64_t>(o.buffer_kb) * 1024;

    CostModel explainer_cost(graph, scheme); // analytic explainer scores via its own cache
    ExplainerBundle bundle;
    const Explainer* expl = nullptr;
    if (sc.rectifier == RectifierKind::explainer_guided) {
        bundle = make_explainer(o.explainer, explainer_cost, o.model, o.seed);
        expl = bundle.explainer.get();
    }
    return run_search(graph, beta, scheme, sc, expl);
}

int cmd_gen_arch(const std::string& arch, int hw, const std::string& out) {
    CompGraph g = make_fixture(arch_from_string(arch), hw);
    atomic_write(out, serialize_graph(g));
    std::cout << "wrote " << out << " (" << g.size() << " nodes, " << g.edges.size()
              << " edges)\n";
    return 0;
}

int cmd_sample_groups(const std::string& arches, const std::string& fusion,
                      const std::string& buffers, int count, uint64_t seed,
                      const std::string& out) {
    SchemeConfig cfg{scheme_from_string(fusion)};
    std::vector<std::string> names;
    for (const auto& a : split_csv(arches)) {
        if (a.find('@') == std::string::npos)
            names.push_back(fixture_name(arch_from_string(a), 224));
        else
            names.push_back(a);
    }
    Dataset d = sample_dataset(names, cfg, parse_kb_list(buffers), count, Rng(seed));
    atomic_write(out, serialize_dataset(d));
    std::cout << "wrote " << out << " (" << d.samples.size() << " samples, " << count
              << " distinct groups)\n";
    return 0;
}

int cmd_train(const std::string& data_path, int epochs, int pg_epochs, uint64_t seed,
              const std::string& out) {
    Dataset data = load_dataset(data_path);
    TrainConfig tc;
    tc.epochs = epochs;
    auto [params, metrics] = train_evaluate(data, tc, Rng(seed));
    std::cout << "test_accuracy: " << format_fraction(metrics.test_accuracy) << '\n'
              << "test_f1: " << format_fraction(metrics.test_f1) << '\n'
              << "f1_valid: " << format_fraction(metrics.f1_valid) << '\n'
              << "f1_invalid: " << format_fraction(metrics.f1_invalid) << '\n'
              << "best_epoch: " << metrics.best_epoch << '\n';
    std::optional<PgParams> pg;
    try {
        auto [pg_params, pg_metrics] = pg_train_explain(params, data, Rng(seed), pg_epochs);
        pg = pg_params;
        std::cout << "pg_training_groups: " << pg_metrics.training_groups << '\n'
                  << "pg_final_loss: " << format_fraction(pg_metrics.epoch_loss.back()) << '\n';
    } catch (const DegenerateDataset& e) {
        std::cout << "pg scorer skipped: " << e.what() << '\n';
    }
    save_checkpoint(out, params, pg ? &*pg : nullptr);
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_optimize(const OptimizeOptions& o) {
    CompGraph graph = resolve_graph(o.arch, o.graph_path, o.hw);
    SearchResult result = run_optimize(graph, o);
    std::ostringstream cfg;
    cfg << "optimize graph=" << graph_label(o.arch, o.graph_path, o.hw) << " fusion=" << o.fusion
        << " buffer_kb=" << o.buffer_kb << " search=" << o.search << " rectifier=" << o.rectifier
        << " explainer=" << o.explainer << " budget=" << o.budget << " seed=" << o.seed
        << " k=" << o.k;
    RunReport report = make_run_report(cfg.str(), result);
    atomic_write(o.out, serialize_run_report(report));
    std::cout << "dram_mb: " << format_mb(result.best_report.dram_bytes) << '\n'
              << "mbu_kb: " << format_kb(result.best_report.mbu_bytes) << '\n'
              << "wall_seconds: " << result.telemetry.wall_seconds << '\n'
              << "wrote " << o.out << '\n';
    return 0;
}

int cmd_explain(const std::string& arch, const std::string& graph_path, int hw,
                const std::string& fusion, int buffer_kb, const std::string& explainer_name,
                const std::string& model, const std::string& members_csv, uint64_t seed,
                const std::string& out) {
    CompGraph graph = resolve_graph(arch, graph_path, hw);
    SchemeConfig scheme{scheme_from_string(fusion)};
    CostModel cost(graph, scheme);
    uint64_t beta = static_cast<uint64_t>(buffer_kb) * 1024;

    FusionGroup group;
    if (!members_csv.empty()) {
        std::vector<int> members;
        for (const auto& tok : split_csv(members_csv)) members.push_back(std::stoi(tok));
        group = FusionGroup::make(graph, members);
    } else {
        auto corpus = sample_invalid_corpus(graph, cost, beta, 1, Rng(seed).derive("corpus"));
        group = corpus.front();
    }
    auto bundle = make_explainer(explainer_name, cost, model, seed);
    Explanation ex = bundle.explainer->explain(group, beta);
    atomic_write(out, serialize_explanation(ex));
    std::cout << "group:";
    for (int m : group.members()) std::cout << ' ' << m;
    std::cout << "\nf_beta_kb: " << format_kb(cost.buffer_req(group)) << "\nselected:";
    for (const auto& e : ex.selected) std::cout << " (" << e.src << "," << e.dst << ")";
    std::cout << "\nwrote " << out << '\n';
    return 0;
}

int cmd_eval_explainers(const std::string& arch, const std::string& graph_path, int hw,
                        const std::string& fusion, int buffer_kb, int count,
                        const std::string& explainers_csv, const std::string& model,
                        uint64_t seed, const std::string& out) {
    CompGraph graph = resolve_graph(arch, graph_path, hw);
    SchemeConfig scheme{scheme_from_string(fusion)};
    uint64_t beta = static_cast<uint64_t>(buffer_kb) * 1024;
    CostModel sample_cost(graph, scheme);
    auto corpus = sample_invalid_corpus(graph, sample_cost, beta, count, Rng(seed).derive("corpus"));

    std::ostringstream os;
    os << "explainer,attempts,successes,rectify_rate,model_evals,fb_queries,fd_queries\n";
    for (const auto& name : split_csv(explainers_csv)) {
        CostModel cost(graph, scheme); // fresh caches per explainer for fair counts
        auto bundle = make_explainer(name, cost, model, seed);
        SplitMemo memo;
        int successes = 0;
        auto t0 = std::chrono::steady_clock::now();
        for (const auto& grp : corpus) {
            try {
                split(grp, beta, cost, *bundle.explainer, memo);
                ++successes;
            } catch (const Unsplittable&) {
            } catch (const DepthExceeded&) {
            }
        }
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
        double rate = static_cast<double>(successes) / static_cast<double>(corpus.size());
        os << name << ',' << corpus.size() << ',' << successes << ',' << format_fraction(rate)
           << ',' << bundle.explainer->eval_count() << ',' << cost.fb_queries() << ','
           << cost.fd_queries() << '\n';
        // Wall time varies run to run, so it goes to the console only.
        std::cout << name << ": rate=" << format_fraction(rate) << " wall_ms=" << ms << '\n';
    }
    atomic_write(out, os.str());
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_validity_curve(const std::string& arch, const std::string& fusion,
                       const std::string& buffers, int count, uint64_t seed,
                       const std::string& out) {
    SchemeConfig cfg{scheme_from_string(fusion)};
    std::vector<uint64_t> betas = parse_kb_list(buffers);
    std::string name = arch.find('@') == std::string::npos
                           ? fixture_name(arch_from_string(arch), 224)
                           : arch;
    Dataset d = sample_dataset({name}, cfg, betas, count, Rng(seed));
    std::ostringstream os;
    os << "beta_kb,n_groups,valid_fraction\n";
    for (uint64_t beta : betas) {
        int valid = 0, total = 0;
        for (const auto& s : d.samples) {
            if (s.beta != beta) continue;
            ++total;
            valid += s.valid ? 1 : 0;
        }
        os << (beta / 1024) << ',' << total << ','
           << format_fraction(static_cast<double>(valid) / static_cast<double>(total)) << '\n';
    }
    atomic_write(out, os.str());
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_budget_curve(const OptimizeOptions& base, const std::string& budgets_csv, int seeds,
                     int jobs, const std::string& out) {
    std::vector<int> budgets;
    for (const auto& tok : split_csv(budgets_csv)) budgets.push_back(std::stoi(tok));
    if (budgets.empty()) throw Error("empty budget list");
    int max_budget = *std::max_element(budgets.begin(), budgets.end());

    CompGraph graph = resolve_graph(base.arch, base.graph_path, base.hw);

    // One run per (rectifier, seed) at the largest budget; smaller budgets are
    // read off the telemetry series (the search trajectory at budget B is a
    // prefix of the trajectory at any larger budget).
    struct Job {
        std::string rectifier;
        uint64_t seed;
        SearchResult result;
    };
    std::vector<Job> work;
    for (const std::string& rect : {std::string("random"), std::string("explainer")})
        for (int s = 0; s < seeds; ++s)
            work.push_back({rect, base.seed + static_cast<uint64_t>(s), {}});

    auto run_one = [&](Job& job) {
        OptimizeOptions o = base;
        o.rectifier = job.rectifier;
        o.seed = job.seed;
        o.budget = max_budget;
        job.result = run_optimize(graph, o);
    };
    if (jobs <= 1) {
        for (auto& job : work) run_one(job);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<size_t> next{0};
        for (int t = 0; t < jobs; ++t)
            futures.push_back(std::async(std::launch::async, [&]() {
                for (size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1))
                    run_one(work[i]);
            }));
        for (auto& f : futures) f.get();
    }

    auto best_at = [](const SearchResult& r, int budget) -> uint64_t {
        uint64_t best = 0;
        bool found = false;
        for (auto [step, dram] : r.telemetry.best_dram_by_step) {
            if (step > budget) break;
            best = dram;
            found = true;
        }
        return found ? best : ~uint64_t{0};
    };

    std::ostringstream os;
    os << "budget,baseline_mean_dram_mb,guided_mean_dram_mb\n";
    for (int b : budgets) {
        double sums[2] = {0.0, 0.0};
        for (const auto& job : work) {
            int side = job.rectifier == "random" ? 0 : 1;
            sums[side] += static_cast<double>(best_at(job.result, b));
        }
        os << b << ',' << format_mb(static_cast<uint64_t>(sums[0] / seeds)) << ','
           << format_mb(static_cast<uint64_t>(sums[1] / seeds)) << '\n';
    }
    atomic_write(out, os.str());
    std::cout << "wrote " << out << '\n';
    return 0;
}

} // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"layer-fusion partition planner"};
    app.require_subcommand(1);

    // gen-arch
    auto* gen = app.add_subcommand("gen-arch", "write a fixture architecture graph");
    std::string gen_arch, gen_out;
    int gen_hw = 224;
    gen->add_option("--arch", gen_arch)->required();
    gen->add_option("--hw", gen_hw);
    gen->add_option("--out", gen_out)->required();

    // sample-groups
    auto* sg = app.add_subcommand("sample-groups", "sample labeled fusion groups");
    std::string sg_arches = "vgg16,resnet18,resnet50,mobilenet_v2,squeezenet,se_branch_toy";
    std::string sg_fusion = "lbdf", sg_buffers = "128,256,512,1024,2048", sg_out;
    int sg_count = 1000;
    uint64_t sg_seed = 0;
    sg->add_option("--arches", sg_arches);
    sg->add_option("--fusion", sg_fusion);
    sg->add_option("--buffers", sg_buffers);
    sg->add_option("--count", sg_count);
    sg->add_option("--seed", sg_seed);
    sg->add_option("--out", sg_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "train the validity classifier (+pg scorer)");
    std::string tr_data, tr_out;
    int tr_epochs = 50, tr_pg_epochs = 25;
    uint64_t tr_seed = 0;
    tr->add_option("--data", tr_data)->required();
    tr->add_option("--epochs", tr_epochs);
    tr->add_option("--pg-epochs", tr_pg_epochs);
    tr->add_option("--seed", tr_seed);
    tr->add_option("--out", tr_out)->required();

    // optimize
    auto* op = app.add_subcommand("optimize", "search for a low-DRAM partition plan");
    OptimizeOptions oo;
    op->add_option("--arch", oo.arch);
    op->add_option("--graph", oo.graph_path);
    op->add_option("--hw", oo.hw);
    op->add_option("--fusion", oo.fusion)->check(CLI::IsMember({"lbdf", "brr"}));
    op->add_option("--buffer-kb", oo.buffer_kb);
    op->add_option("--search", oo.search)->check(CLI::IsMember({"rs", "ls", "nsga2"}));
    op->add_option("--rectifier", oo.rectifier)->check(CLI::IsMember({"random", "explainer"}));
    op->add_option("--explainer", oo.explainer)
        ->check(CLI::IsMember({"analytic", "occlusion", "gnne", "pg"}));
    op->add_option("--model", oo.model);
    op->add_option("--budget", oo.budget);
    op->add_option("--seed", oo.seed);
    op->add_option("--k", oo.k);
    op->add_option("--out", oo.out)->required();

    // explain
    auto* ex = app.add_subcommand("explain", "explain one invalid fusion group");
    std::string ex_arch, ex_graph, ex_fusion = "lbdf", ex_explainer = "analytic", ex_model,
                ex_members, ex_out;
    int ex_hw = 224, ex_buffer = 128;
    uint64_t ex_seed = 0;
    ex->add_option("--arch", ex_arch);
    ex->add_option("--graph", ex_graph);
    ex->add_option("--hw", ex_hw);
    ex->add_option("--fusion", ex_fusion)->check(CLI::IsMember({"lbdf", "brr"}));
    ex->add_option("--buffer-kb", ex_buffer);
    ex->add_option("--explainer", ex_explainer)
        ->check(CLI::IsMember({"analytic", "occlusion", "gnne", "pg"}));
    ex->add_option("--model", ex_model);
    ex->add_option("--members", ex_members);
    ex->add_option("--seed", ex_seed);
    ex->add_option("--out", ex_out)->required();

    // eval-explainers
    auto* ee = app.add_subcommand("eval-explainers", "rectify-rate table over an invalid corpus");
    std::string ee_arch, ee_graph, ee_fusion = "lbdf", ee_model, ee_out,
                ee_list = "analytic,occlusion,gnne,pg";
    int ee_hw = 224, ee_buffer = 128, ee_count = 300;
    uint64_t ee_seed = 0;
    ee->add_option("--arch", ee_arch);
    ee->add_option("--graph", ee_graph);
    ee->add_option("--hw", ee_hw);
    ee->add_option("--fusion", ee_fusion)->check(CLI::IsMember({"lbdf", "brr"}));
    ee->add_option("--buffer-kb", ee_buffer);
    ee->add_option("--count", ee_count);
    ee->add_option("--explainers", ee_list);
    ee->add_option("--model", ee_model);
    ee->add_option("--seed", ee_seed);
    ee->add_option("--out", ee_out)->required();

    // validity-curve
    auto* vc = app.add_subcommand("validity-curve", "valid-group fraction per buffer size");
    std::string vc_arch, vc_fusion = "lbdf", vc_buffers = "128,256,512,1024,2048", vc_out;
    int vc_count = 300;
    uint64_t vc_seed = 0;
    vc->add_option("--arch", vc_arch)->required();
    vc->add_option("--fusion", vc_fusion)->check(CLI::IsMember({"lbdf", "brr"}));
    vc->add_option("--buffers", vc_buffers);
    vc->add_option("--count", vc_count);
    vc->add_option("--seed", vc_seed);
    vc->add_option("--out", vc_out)->required();

    // budget-curve
    auto* bc = app.add_subcommand("budget-curve", "baseline vs guided best-DRAM per budget");
    OptimizeOptions bo;
    std::string bc_budgets = "250,500,1000,2000", bc_out;
    int bc_seeds = 5, bc_jobs = 1;
    bc->add_option("--arch", bo.arch);
    bc->add_option("--graph", bo.graph_path);
    bc->add_option("--hw", bo.hw);
    bc->add_option("--fusion", bo.fusion)->check(CLI::IsMember({"lbdf", "brr"}));
    bc->add_option("--buffer-kb", bo.buffer_kb);
    bc->add_option("--search", bo.search)->check(CLI::IsMember({"rs", "ls", "nsga2"}));
    bc->add_option("--explainer", bo.explainer)
        ->check(CLI::IsMember({"analytic", "occlusion", "gnne", "pg"}));
    bc->add_option("--model", bo.model);
    bc->add_option("--budgets", bc_budgets);
    bc->add_option("--seeds", bc_seeds);
    bc->add_option("--seed", bo.seed);
    bc->add_option("--k", bo.k);
    bc->add_option("--jobs", bc_jobs);
    bc->add_option("--out", bc_out)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_arch(gen_arch, gen_hw, gen_out);
        if (sg->parsed())
            return cmd_sample_groups(sg_arches, sg_fusion, sg_buffers, sg_count, sg_seed, sg_out);
        if (tr->parsed()) return cmd_train(tr_data, tr_epochs, tr_pg_epochs, tr_seed, tr_out);
        if (op->parsed()) return cmd_optimize(oo);
        if (ex->parsed())
            return cmd_explain(ex_arch, ex_graph, ex_hw, ex_fusion, ex_buffer, ex_explainer,
                               ex_model, ex_members, ex_seed, ex_out);
        if (ee->parsed())
            return cmd_eval_explainers(ee_arch, ee_graph, ee_hw, ee_fusion, ee_buffer, ee_count,
                                       ee_list, ee_model, ee_seed, ee_out);
        if (vc->parsed())
            return cmd_validity_curve(vc_arch, vc_fusion, vc_buffers, vc_count, vc_seed, vc_out);
        if (bc->parsed()) return cmd_budget_curve(bo, bc_budgets, bc_seeds, bc_jobs, bc_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace lfopt
