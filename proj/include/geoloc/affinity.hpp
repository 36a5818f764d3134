#pragma once

#include <functional>
#include <string>
#include <vector>

#include "geoloc/geo.hpp"
#include "geoloc/retrieval.hpp"

namespace geoloc {

enum class DistanceUnit { kilometers, meters };

struct GraphNode {
    std::string ref_id;
    int cluster = 0;
    GpsCoord gps;
    double s = 0.0;  // matching similarity of this candidate to its query building
};

// Edge-weighted multipartite graph over retrieved reference buildings.
// a_ij = 1/2 (exp(-d_ij^2 / (2 sigma^2)) + alpha (s_i + s_j)) across clusters,
// 0 within a cluster and on the diagonal.
struct MatchGraph {
    int n = 0;
    std::vector<GraphNode> nodes;
    std::vector<double> a;  // n x n row-major, symmetric, nonnegative
    int n_clusters = 0;
    double sigma = 0.3;
    double alpha = 0.5;

    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
    bool has_edges() const;
};

MatchGraph build_graph(const std::vector<CandidateCluster>& clusters,
                       const std::function<GpsCoord(const std::string&)>& gps_of,
                       double sigma, double alpha,
                       DistanceUnit unit = DistanceUnit::kilometers);

// Textual dump (node table + matrix) for debugging.
std::string dump_graph(const MatchGraph& g);

}  // namespace geoloc
