#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfopt/cost.hpp"
#include "lfopt/search.hpp"

namespace lfopt {

// Fixed-point unit formatting: 1 KB = 1024 bytes, 1 MB = 1024^2 bytes,
// three decimals. All report files are plain text (key: value lines plus
// bracketed CSV sections) and contain no wall-clock data, so identical
// invocations produce byte-identical files.
std::string format_mb(uint64_t bytes);
std::string format_kb(uint64_t bytes);
std::string format_fraction(double f); // 6 decimals

struct RunReport {
    std::string config;
    uint64_t dram_bytes = 0;
    uint64_t mbu_bytes = 0;
    int plans_evaluated = 0;
    int rectify_attempts = 0;
    int rectify_successes = 0;
    uint64_t fb_queries = 0;
    uint64_t fd_queries = 0;
    std::vector<int> excluded;                            // nodes outside the search space
    std::vector<std::pair<int, int>> plan;                // node -> group
    std::vector<std::pair<int, uint64_t>> best_dram_by_step;
};

RunReport make_run_report(std::string config, const SearchResult& result);
std::string serialize_run_report(const RunReport& r);

// Writes via a temp file in the same directory plus rename.
void atomic_write(const std::string& path, const std::string& content);

} // namespace lfopt
