#pragma once

#include <cstdint>
#include <vector>

#include "geoloc/affinity.hpp"

namespace geoloc {

struct GmcpSolution {
    std::vector<int> selection;  // one node index per cluster, in cluster order
    double total_weight = 0.0;   // sum of a_ij over selected pairs
    enum class Method { exact, local } method = Method::exact;
};

inline constexpr std::uint64_t kGmcpEnumerationBudget = 1000000;

// Number of one-per-cluster combinations (saturates at budget+1).
std::uint64_t enumeration_count(const MatchGraph& g);

// Global maximum of the total selected-pair weight by exhaustive enumeration.
// Ties broken by lexicographically smallest selection. Throws ScaleError when
// the combination count exceeds the budget.
GmcpSolution solve_exact(const MatchGraph& g);

// Hill climbing over single-node swaps from seeded random starts.
GmcpSolution solve_local(const MatchGraph& g, int restarts, std::uint64_t seed);

double selection_weight(const MatchGraph& g, const std::vector<int>& selection);

}  // namespace geoloc
