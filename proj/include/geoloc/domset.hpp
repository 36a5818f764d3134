#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoloc/affinity.hpp"

namespace geoloc {

struct SolverConfig {
    int max_iterations = 10000;
    double convergence_tol = 1e-8;  // on the L1 step change
    double support_epsilon = 1e-4;
    std::string trace_csv_path;  // when set, append (iteration,payoff,support) rows
};

struct DominantSetResult {
    std::set<int> support;
    std::vector<double> x_final;  // on the simplex
    double payoff = 0.0;          // x^T A x at convergence
    int iterations = 0;
    bool converged = false;
};

// One discrete replicator step x_i <- x_i (Ax)_i / (x^T A x).
// Throws DataError when x^T A x = 0.
std::vector<double> replicator_step(const std::vector<double>& a, int n,
                                    const std::vector<double>& x);

// Replicator dynamics from the barycenter until the L1 change drops below
// tolerance or the iteration budget runs out.
DominantSetResult solve(const std::vector<double>& a, int n, const SolverConfig& cfg = {});
DominantSetResult solve(const MatchGraph& g, const SolverConfig& cfg = {});

// Exponential-time oracle for the recursive set weights. Subsets are bitmasks
// over node indices; memoization is shared through the cache argument.
using WsCache = std::unordered_map<std::uint64_t, double>;

double oracle_ws(std::uint32_t subset, int i, const std::vector<double>& a, int n,
                 WsCache& cache);
double oracle_total_weight(std::uint32_t subset, const std::vector<double>& a, int n,
                           WsCache& cache);

// Checks the three dominant-set conditions within tolerance:
// w_S(i) > 0 for i in S, w_{S+i}(i) < 0 for i outside, W(T) > 0 for T subset of S.
bool verify_dominant(std::uint32_t subset, const std::vector<double>& a, int n,
                     WsCache& cache, double tol = 1e-9);
bool verify_dominant(const std::set<int>& subset, const std::vector<double>& a, int n,
                     double tol = 1e-9);

// Payoff of a verified set at its weighted characteristic vector.
double set_payoff(std::uint32_t subset, const std::vector<double>& a, int n,
                  WsCache& cache);

// Exhaustive search for the best-payoff verified dominant set over all subsets
// up to max_size nodes. Returns nullopt when nothing verifies.
struct VerifiedSet {
    std::uint32_t mask = 0;
    double payoff = 0.0;
};
std::optional<VerifiedSet> best_dominant_exhaustive(const std::vector<double>& a, int n,
                                                    int max_size = 10);

// Peel-off enumeration: extract a dominant set, remove its support, repeat.
std::vector<DominantSetResult> peel_dominant_sets(const MatchGraph& g, int max_sets,
                                                  const SolverConfig& cfg = {});

// At most one reference per cluster: keep the support node with the largest
// converged weight (ties by larger s, then smaller id).
std::map<int, std::string> select_per_cluster(const DominantSetResult& result,
                                              const MatchGraph& g);

}  // namespace geoloc
