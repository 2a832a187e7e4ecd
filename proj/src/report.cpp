#include "lfopt/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lfopt {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace

std::string format_mb(uint64_t bytes) {
    return fixed(static_cast<double>(bytes) / (1024.0 * 1024.0), 3);
}

std::string format_kb(uint64_t bytes) { return fixed(static_cast<double>(bytes) / 1024.0, 3); }

std::string format_fraction(double f) { return fixed(f, 6); }

RunReport make_run_report(std::string config, const SearchResult& result) {
    RunReport r;
    r.config = std::move(config);
    r.dram_bytes = result.best_report.dram_bytes;
    r.mbu_bytes = result.best_report.mbu_bytes;
    r.plans_evaluated = result.telemetry.plans_evaluated;
    r.rectify_attempts = result.telemetry.rectify_attempts;
    r.rectify_successes = result.telemetry.rectify_successes;
    r.fb_queries = result.telemetry.fb_queries;
    r.fd_queries = result.telemetry.fd_queries;
    r.excluded = result.excluded;
    for (int node : result.best_plan.covered)
        r.plan.emplace_back(node, result.best_plan.group_of(node));
    r.best_dram_by_step = result.telemetry.best_dram_by_step;
    return r;
}

std::string serialize_run_report(const RunReport& r) {
    std::ostringstream os;
    os << "# lfopt report v1\n";
    os << "config: " << r.config << '\n';
    os << "dram_bytes: " << r.dram_bytes << '\n';
    os << "dram_mb: " << format_mb(r.dram_bytes) << '\n';
    os << "mbu_bytes: " << r.mbu_bytes << '\n';
    os << "mbu_kb: " << format_kb(r.mbu_bytes) << '\n';
    os << "plans_evaluated: " << r.plans_evaluated << '\n';
    os << "rectify_attempts: " << r.rectify_attempts << '\n';
    os << "rectify_successes: " << r.rectify_successes << '\n';
    double rate = r.rectify_attempts == 0
                      ? 1.0
                      : static_cast<double>(r.rectify_successes) /
                            static_cast<double>(r.rectify_attempts);
    os << "rectify_rate: " << format_fraction(rate) << '\n';
    os << "fb_queries: " << r.fb_queries << '\n';
    os << "fd_queries: " << r.fd_queries << '\n';
    os << "excluded_nodes:";
    for (int v : r.excluded) os << ' ' << v;
    os << '\n';
    os << "[plan]\n";
    os << "node,group\n";
    for (auto [node, group] : r.plan) os << node << ',' << group << '\n';
    os << "[best_dram_by_step]\n";
    os << "step,best_dram_bytes\n";
    for (auto [step, dram] : r.best_dram_by_step) os << step << ',' << dram << '\n';
    return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
    fs::path tmp = dir / (target.filename().string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write '" + tmp.string() + "'");
        f << content;
        if (!f) throw Error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

} // namespace lfopt
