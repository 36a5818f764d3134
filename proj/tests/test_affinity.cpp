#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "geoloc/affinity.hpp"
#include "geoloc/errors.hpp"

using namespace geoloc;

namespace {

struct Fixture {
    std::vector<CandidateCluster> clusters;
    std::map<std::string, GpsCoord> gps;

    void add(int cluster, const std::string& id, GpsCoord p, double s) {
        while (clusters.size() <= static_cast<std::size_t>(cluster)) {
            CandidateCluster c;
            c.query_id = "q" + std::to_string(clusters.size());
            clusters.push_back(c);
        }
        clusters[cluster].members.emplace_back(id, s);
        gps[id] = p;
    }

    MatchGraph build(double sigma = 0.3, double alpha = 0.5) const {
        return build_graph(clusters, [&](const std::string& id) { return gps.at(id); },
                           sigma, alpha);
    }
};

const GpsCoord kBase{40.7, -74.0};

GpsCoord offset_north(double meters) {
    return {kBase.lat + meters / (kEarthRadiusM * 3.14159265358979323846 / 180.0), kBase.lon};
}

}  // namespace

TEST_CASE("edge weight formula") {
    Fixture f;
    SUBCASE("d = 0, zero similarity -> 0.5") {
        f.add(0, "a", kBase, 0.0);
        f.add(1, "b", kBase, 0.0);
        const MatchGraph g = f.build();
        CHECK(g.at(0, 1) == doctest::Approx(0.5));
    }
    SUBCASE("d = 0, s = 1 both, alpha 0.5 -> 1.0") {
        f.add(0, "a", kBase, 1.0);
        f.add(1, "b", kBase, 1.0);
        CHECK(f.build().at(0, 1) == doctest::Approx(1.0));
    }
    SUBCASE("d = 0.3 km at sigma 0.3, s = 0 -> exp(-1/2)/2") {
        f.add(0, "a", kBase, 0.0);
        f.add(1, "b", offset_north(300.0), 0.0);
        CHECK(f.build().at(0, 1) == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-6));
        CHECK(f.build().at(0, 1) == doctest::Approx(0.3033).epsilon(1e-3));
    }
    SUBCASE("meters unit changes the kernel scale") {
        f.add(0, "a", kBase, 0.0);
        f.add(1, "b", offset_north(0.3), 0.0);
        const MatchGraph g = build_graph(
            f.clusters, [&](const std::string& id) { return f.gps.at(id); }, 0.3, 0.5,
            DistanceUnit::meters);
        CHECK(g.at(0, 1) == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-4));
    }
}

TEST_CASE("matrix structure: symmetric, zero diagonal, zero intra-cluster") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0), dm(0.0, 0.01);
    Fixture f;
    int id = 0;
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 3; ++i)
            f.add(c, "n" + std::to_string(id++),
                  {kBase.lat + dm(rng), kBase.lon + dm(rng)}, u(rng));
    const MatchGraph g = f.build();
    REQUIRE(g.n == 12);
    for (int i = 0; i < g.n; ++i) {
        CHECK(g.at(i, i) == 0.0);
        for (int j = 0; j < g.n; ++j) {
            CHECK(g.at(i, j) == g.at(j, i));
            CHECK(g.at(i, j) >= 0.0);
            CHECK(g.at(i, j) <= 1.0);
            if (g.nodes[i].cluster == g.nodes[j].cluster) CHECK(g.at(i, j) == 0.0);
        }
    }
}

TEST_CASE("monotonicity in distance and similarity") {
    // decreasing in d at fixed s
    double prev = 2.0;
    for (double d_m : {0.0, 100.0, 200.0, 400.0, 800.0}) {
        Fixture f;
        f.add(0, "a", kBase, 0.3);
        f.add(1, "b", offset_north(d_m), 0.3);
        const double w = f.build().at(0, 1);
        CHECK(w < prev);
        prev = w;
    }
    // increasing in s_i + s_j at fixed d
    prev = -1.0;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Fixture f;
        f.add(0, "a", kBase, s);
        f.add(1, "b", offset_north(250.0), s);
        const double w = f.build().at(0, 1);
        CHECK(w > prev);
        prev = w;
    }
}

TEST_CASE("build_graph validation") {
    Fixture f;
    CHECK_THROWS_AS(f.build(), DataError);  // no clusters
    f.add(0, "a", kBase, 0.5);
    CHECK_THROWS_AS(f.build(0.0, 0.5), UsageError);
    CHECK_THROWS_AS(f.build(0.3, -1.0), UsageError);
    f.add(1, "bad", {999.0, 0.0}, 0.5);
    CHECK_THROWS_AS(f.build(), DataError);  // invalid GPS
}

TEST_CASE("dump_graph mentions every node") {
    Fixture f;
    f.add(0, "alpha", kBase, 0.1);
    f.add(1, "beta", offset_north(50.0), 0.9);
    const std::string dump = dump_graph(f.build());
    CHECK(dump.find("alpha") != std::string::npos);
    CHECK(dump.find("beta") != std::string::npos);
}
