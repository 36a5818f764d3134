#include "geoloc/gmcp.hpp"

#include <algorithm>
#include <random>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {

std::vector<std::vector<int>> cluster_nodes(const MatchGraph& g) {
    std::vector<std::vector<int>> clusters(g.n_clusters);
    for (int i = 0; i < g.n; ++i) clusters[g.nodes[i].cluster].push_back(i);
    for (const auto& c : clusters)
        if (c.empty()) throw DataError("gmcp: empty cluster in graph");
    return clusters;
}

int best_by_similarity(const MatchGraph& g, const std::vector<int>& nodes) {
    int best = nodes.front();
    for (int i : nodes) {
        if (g.nodes[i].s > g.nodes[best].s ||
            (g.nodes[i].s == g.nodes[best].s && g.nodes[i].ref_id < g.nodes[best].ref_id))
            best = i;
    }
    return best;
}

}  // namespace

double selection_weight(const MatchGraph& g, const std::vector<int>& selection) {
    double w = 0.0;
    for (std::size_t i = 0; i < selection.size(); ++i)
        for (std::size_t j = i + 1; j < selection.size(); ++j)
            w += g.at(selection[i], selection[j]);
    return w;
}

std::uint64_t enumeration_count(const MatchGraph& g) {
    const auto clusters = cluster_nodes(g);
    std::uint64_t count = 1;
    for (const auto& c : clusters) {
        count *= c.size();
        if (count > kGmcpEnumerationBudget) return kGmcpEnumerationBudget + 1;
    }
    return count;
}

GmcpSolution solve_exact(const MatchGraph& g) {
    const auto clusters = cluster_nodes(g);
    if (enumeration_count(g) > kGmcpEnumerationBudget)
        throw ScaleError("solve_exact: combination count exceeds budget; use solve_local");

    GmcpSolution best;
    best.method = GmcpSolution::Method::exact;
    if (clusters.size() == 1) {
        best.selection = {best_by_similarity(g, clusters[0])};
        best.total_weight = 0.0;
        return best;
    }

    const int nc = static_cast<int>(clusters.size());
    std::vector<int> pick(nc, 0);  // mixed-radix counter, lexicographic order
    bool first = true;
    for (;;) {
        std::vector<int> sel(nc);
        for (int c = 0; c < nc; ++c) sel[c] = clusters[c][pick[c]];
        const double w = selection_weight(g, sel);
        if (first || w > best.total_weight) {
            best.selection = sel;
            best.total_weight = w;
            first = false;
        }
        int c = nc - 1;
        while (c >= 0 && ++pick[c] == static_cast<int>(clusters[c].size())) pick[c--] = 0;
        if (c < 0) break;
    }
    return best;
}

GmcpSolution solve_local(const MatchGraph& g, int restarts, std::uint64_t seed) {
    if (restarts < 1) throw UsageError("solve_local: restarts must be >= 1");
    const auto clusters = cluster_nodes(g);
    const int nc = static_cast<int>(clusters.size());
    std::mt19937_64 rng(seed);

    GmcpSolution best;
    best.method = GmcpSolution::Method::local;
    bool have_best = false;

    for (int r = 0; r < restarts; ++r) {
        std::vector<int> sel(nc);
        for (int c = 0; c < nc; ++c) {
            std::uniform_int_distribution<std::size_t> pick(0, clusters[c].size() - 1);
            sel[c] = clusters[c][pick(rng)];
        }
        bool improved = true;
        while (improved) {
            improved = false;
            for (int c = 0; c < nc; ++c) {
                // gain of node i in cluster c against the other selected nodes
                double cur = 0.0;
                for (int o = 0; o < nc; ++o)
                    if (o != c) cur += g.at(sel[c], sel[o]);
                int best_node = sel[c];
                double best_gain = cur;
                for (int i : clusters[c]) {
                    if (i == sel[c]) continue;
                    double gain = 0.0;
                    for (int o = 0; o < nc; ++o)
                        if (o != c) gain += g.at(i, sel[o]);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_node = i;
                    }
                }
                if (best_node != sel[c]) {
                    sel[c] = best_node;
                    improved = true;
                }
            }
        }
        double w = selection_weight(g, sel);
        if (nc == 1) {
            sel = {best_by_similarity(g, clusters[0])};
            w = 0.0;
        }
        if (!have_best || w > best.total_weight ||
            (w == best.total_weight && sel < best.selection)) {
            best.selection = sel;
            best.total_weight = w;
            have_best = true;
        }
    }
    return best;
}

}  // namespace geoloc
