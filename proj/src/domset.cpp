#include "geoloc/domset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {

int count_support(const std::vector<double>& x, double eps) {
    int c = 0;
    for (double v : x) c += (v > eps);
    return c;
}

}  // namespace

std::vector<double> replicator_step(const std::vector<double>& a, int n,
                                    const std::vector<double>& x) {
    std::vector<double> ax(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = &a[static_cast<std::size_t>(i) * n];
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j] * x[j];
        ax[i] = s;
    }
    double payoff = 0.0;
    for (int i = 0; i < n; ++i) payoff += x[i] * ax[i];
    if (payoff <= 0.0)
        throw DataError("replicator_step: zero payoff (no edge mass under current state)");
    std::vector<double> next(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        next[i] = x[i] * ax[i] / payoff;
        sum += next[i];
    }
    for (double& v : next) v /= sum;  // absorb rounding drift
    return next;
}

DominantSetResult solve(const std::vector<double>& a, int n, const SolverConfig& cfg) {
    if (n < 1) throw UsageError("solve: empty graph");
    DominantSetResult r;
    if (n == 1) {
        r.support = {0};
        r.x_final = {1.0};
        r.payoff = 0.0;
        r.converged = true;
        return r;
    }
    bool any = false;
    for (double v : a) any = any || v > 0.0;
    if (!any) throw DataError("solve: graph has no edges");

    std::ofstream trace;
    if (!cfg.trace_csv_path.empty()) {
        trace.open(cfg.trace_csv_path);
        trace << "iteration,payoff,support_size\n";
    }

    // Coordinates decayed far below the convergence tolerance can no longer
    // influence the dynamics at its resolution, so the iteration works on a
    // compacted copy of the surviving rows/columns: a dense matvec the
    // compiler can vectorize, shrinking as the support collapses.
    const double prune_below = cfg.convergence_tol * 1e-4;
    int m = n;                     // size of the compacted problem
    std::vector<int> orig(n);      // compacted index -> original index
    for (int i = 0; i < n; ++i) orig[i] = i;
    std::vector<double> b = a;     // compacted m x m matrix
    std::vector<double> x(n, 1.0 / n);
    std::vector<double> ax(n, 0.0);
    std::vector<int> surv;
    surv.reserve(n);

    auto payoff_of = [&]() {
        double p = 0.0;
        for (int i = 0; i < m; ++i) {
            const double* row = &b[static_cast<std::size_t>(i) * m];
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += row[j] * x[j];
            p += x[i] * s;
        }
        return p;
    };

    for (int it = 0; it < cfg.max_iterations; ++it) {
        double xax = 0.0;
        for (int i = 0; i < m; ++i) {
            const double* row = &b[static_cast<std::size_t>(i) * m];
            // four partial sums break the add dependency chain
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int j = 0;
            for (; j + 4 <= m; j += 4) {
                s0 += row[j] * x[j];
                s1 += row[j + 1] * x[j + 1];
                s2 += row[j + 2] * x[j + 2];
                s3 += row[j + 3] * x[j + 3];
            }
            double s = (s0 + s1) + (s2 + s3);
            for (; j < m; ++j) s += row[j] * x[j];
            ax[i] = s;
            xax += x[i] * s;
        }
        if (xax == 0.0) throw DataError("solve: zero payoff at current state");
        const double inv_xax = 1.0 / xax;
        double change = 0.0;
        double mass = 0.0;
        int keep = 0;
        for (int i = 0; i < m; ++i) {
            const double next = x[i] * ax[i] * inv_xax;
            change += std::abs(next - x[i]);
            x[i] = next;
            if (next >= prune_below) ++keep;
            mass += next;
        }
        if (keep < m) {
            surv.clear();
            for (int i = 0; i < m; ++i) {
                if (x[i] >= prune_below)
                    surv.push_back(i);
                else
                    mass -= x[i];
            }
            // survivors stay in ascending order, so in-place repacking only
            // ever writes at or below the positions it still has to read
            for (int wi = 0; wi < keep; ++wi) {
                const double* src = &b[static_cast<std::size_t>(surv[wi]) * m];
                double* dst = &b[static_cast<std::size_t>(wi) * keep];
                for (int wj = 0; wj < keep; ++wj) dst[wj] = src[surv[wj]];
                x[wi] = x[surv[wi]];
                orig[wi] = orig[surv[wi]];
            }
            std::fill(x.begin() + keep, x.begin() + m, 0.0);
            m = keep;
            for (int i = 0; i < m; ++i) x[i] /= mass;
        }
        r.iterations = it + 1;
        if (trace.is_open())
            trace << r.iterations << ',' << payoff_of() << ','
                  << count_support(x, cfg.support_epsilon) << '\n';
        if (change < cfg.convergence_tol) {
            r.converged = true;
            break;
        }
    }

    r.payoff = payoff_of();
    r.x_final.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
        r.x_final[orig[i]] = x[i];
        if (x[i] > cfg.support_epsilon) r.support.insert(orig[i]);
    }
    return r;
}

DominantSetResult solve(const MatchGraph& g, const SolverConfig& cfg) {
    return solve(g.a, g.n, cfg);
}

double oracle_ws(std::uint32_t subset, int i, const std::vector<double>& a, int n,
                 WsCache& cache) {
    if (n > 20) throw ScaleError("oracle_ws: n > 20");
    if (std::popcount(subset) > 15) throw ScaleError("oracle_ws: |S| > 15");
    if (!(subset & (1u << i))) throw UsageError("oracle_ws: i not in S");
    if (std::popcount(subset) == 1) return 1.0;

    const std::uint64_t key = (static_cast<std::uint64_t>(subset) << 5) | static_cast<std::uint32_t>(i);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const std::uint32_t rest = subset & ~(1u << i);
    const int rest_size = std::popcount(rest);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        if (!(rest & (1u << j))) continue;
        // phi_{rest}(j, i) = a_ji - mean over k in rest of a_jk
        double mean = 0.0;
        for (int k = 0; k < n; ++k)
            if (rest & (1u << k)) mean += a[static_cast<std::size_t>(j) * n + k];
        mean /= rest_size;
        const double phi = a[static_cast<std::size_t>(j) * n + i] - mean;
        total += phi * oracle_ws(rest, j, a, n, cache);
    }
    cache.emplace(key, total);
    return total;
}

double oracle_total_weight(std::uint32_t subset, const std::vector<double>& a, int n,
                           WsCache& cache) {
    double w = 0.0;
    for (int i = 0; i < n; ++i)
        if (subset & (1u << i)) w += oracle_ws(subset, i, a, n, cache);
    return w;
}

bool verify_dominant(std::uint32_t subset, const std::vector<double>& a, int n,
                     WsCache& cache, double tol) {
    if (subset == 0) throw UsageError("verify_dominant: empty set");
    for (int i = 0; i < n; ++i) {
        if (subset & (1u << i)) {
            if (!(oracle_ws(subset, i, a, n, cache) > tol)) return false;
        } else {
            if (!(oracle_ws(subset | (1u << i), i, a, n, cache) < -tol)) return false;
        }
    }
    // W(T) > 0 for every non-empty T contained in S
    for (std::uint32_t t = subset; t != 0; t = (t - 1) & subset) {
        if (!(oracle_total_weight(t, a, n, cache) > tol)) return false;
    }
    return true;
}

bool verify_dominant(const std::set<int>& subset, const std::vector<double>& a, int n,
                     double tol) {
    std::uint32_t mask = 0;
    for (int i : subset) mask |= (1u << i);
    WsCache cache;
    return verify_dominant(mask, a, n, cache, tol);
}

double set_payoff(std::uint32_t subset, const std::vector<double>& a, int n,
                  WsCache& cache) {
    const double total = oracle_total_weight(subset, a, n, cache);
    if (total <= 0.0) return 0.0;
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (subset & (1u << i)) x[i] = oracle_ws(subset, i, a, n, cache) / total;
    double payoff = 0.0;
    for (int i = 0; i < n; ++i) {
        if (x[i] == 0.0) continue;
        const double* row = &a[static_cast<std::size_t>(i) * n];
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j] * x[j];
        payoff += x[i] * s;
    }
    return payoff;
}

std::optional<VerifiedSet> best_dominant_exhaustive(const std::vector<double>& a, int n,
                                                    int max_size) {
    if (n > 20) throw ScaleError("best_dominant_exhaustive: n > 20");
    WsCache cache;
    std::optional<VerifiedSet> best;
    const std::uint32_t limit = 1u << n;
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
        if (std::popcount(mask) > max_size) continue;
        if (!verify_dominant(mask, a, n, cache)) continue;
        const double p = set_payoff(mask, a, n, cache);
        if (!best || p > best->payoff) best = VerifiedSet{mask, p};
    }
    return best;
}

std::vector<DominantSetResult> peel_dominant_sets(const MatchGraph& g, int max_sets,
                                                  const SolverConfig& cfg) {
    std::vector<DominantSetResult> out;
    std::vector<int> alive(g.n);
    std::iota(alive.begin(), alive.end(), 0);
    while (static_cast<int>(out.size()) < max_sets && !alive.empty()) {
        const int m = static_cast<int>(alive.size());
        std::vector<double> sub(static_cast<std::size_t>(m) * m, 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                sub[static_cast<std::size_t>(i) * m + j] = g.at(alive[i], alive[j]);
        DominantSetResult r;
        try {
            r = solve(sub, m, cfg);
        } catch (const DataError&) {
            break;  // remaining subgraph has no edges
        }
        // map back to original node indices
        DominantSetResult mapped;
        mapped.payoff = r.payoff;
        mapped.iterations = r.iterations;
        mapped.converged = r.converged;
        mapped.x_final.assign(g.n, 0.0);
        for (int i = 0; i < m; ++i) mapped.x_final[alive[i]] = r.x_final[i];
        for (int i : r.support) mapped.support.insert(alive[i]);
        out.push_back(mapped);
        std::vector<int> next;
        for (int i = 0; i < m; ++i)
            if (!r.support.count(i)) next.push_back(alive[i]);
        alive = std::move(next);
    }
    return out;
}

std::map<int, std::string> select_per_cluster(const DominantSetResult& result,
                                              const MatchGraph& g) {
    if (result.support.empty()) throw DataError("select_per_cluster: empty support");
    std::map<int, int> chosen;  // cluster -> node index
    for (int i : result.support) {
        const auto& nd = g.nodes[i];
        auto it = chosen.find(nd.cluster);
        if (it == chosen.end()) {
            chosen[nd.cluster] = i;
            continue;
        }
        const auto& cur = g.nodes[it->second];
        const double xi = result.x_final[i], xc = result.x_final[it->second];
        const bool better = xi > xc ||
                            (xi == xc && (nd.s > cur.s ||
                                          (nd.s == cur.s && nd.ref_id < cur.ref_id)));
        if (better) it->second = i;
    }
    std::map<int, std::string> out;
    for (const auto& [cluster, node] : chosen) out[cluster] = g.nodes[node].ref_id;
    return out;
}

}  // namespace geoloc
