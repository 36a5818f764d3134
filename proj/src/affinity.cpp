#include "geoloc/affinity.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "geoloc/errors.hpp"

namespace geoloc {

bool MatchGraph::has_edges() const {
    for (double v : a)
        if (v > 0.0) return true;
    return false;
}

MatchGraph build_graph(const std::vector<CandidateCluster>& clusters,
                       const std::function<GpsCoord(const std::string&)>& gps_of,
                       double sigma, double alpha, DistanceUnit unit) {
    if (clusters.empty()) throw DataError("build_graph: no candidate clusters");
    if (sigma <= 0.0) throw UsageError("build_graph: sigma must be positive");
    if (alpha < 0.0) throw UsageError("build_graph: alpha must be nonnegative");

    MatchGraph g;
    g.sigma = sigma;
    g.alpha = alpha;
    g.n_clusters = static_cast<int>(clusters.size());
    for (int c = 0; c < g.n_clusters; ++c) {
        for (const auto& [ref_id, s] : clusters[c].members) {
            GraphNode node;
            node.ref_id = ref_id;
            node.cluster = c;
            node.gps = gps_of(ref_id);
            require_valid(node.gps);
            node.s = s;
            g.nodes.push_back(std::move(node));
        }
    }
    g.n = static_cast<int>(g.nodes.size());
    if (g.n == 0) throw DataError("build_graph: all clusters empty");
    g.a.assign(static_cast<std::size_t>(g.n) * g.n, 0.0);

    const double unit_scale = (unit == DistanceUnit::kilometers) ? 1e-3 : 1.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) {
            if (g.nodes[i].cluster == g.nodes[j].cluster) continue;
            const double d = geo_distance_m(g.nodes[i].gps, g.nodes[j].gps) * unit_scale;
            const double w = 0.5 * (std::exp(-d * d / (2.0 * sigma * sigma)) +
                                    alpha * (g.nodes[i].s + g.nodes[j].s));
            g.a[static_cast<std::size_t>(i) * g.n + j] = w;
            g.a[static_cast<std::size_t>(j) * g.n + i] = w;
        }
    }
    return g;
}

std::string dump_graph(const MatchGraph& g) {
    std::ostringstream out;
    out << "# n=" << g.n << " clusters=" << g.n_clusters
        << " sigma=" << g.sigma << " alpha=" << g.alpha << "\n";
    for (int i = 0; i < g.n; ++i) {
        const auto& nd = g.nodes[i];
        char buf[128];
        std::snprintf(buf, sizeof buf, "%d cluster=%d s=%.6f lat=%.7f lon=%.7f %s\n",
                      i, nd.cluster, nd.s, nd.gps.lat, nd.gps.lon, nd.ref_id.c_str());
        out << buf;
    }
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.9f%c", g.at(i, j), j + 1 == g.n ? '\n' : ' ');
            out << buf;
        }
    }
    return out.str();
}

}  // namespace geoloc
