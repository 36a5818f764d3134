#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "geoloc/affinity.hpp"
#include "geoloc/domset.hpp"
#include "geoloc/gmcp.hpp"
#include "geoloc/metric.hpp"
#include "geoloc/retrieval.hpp"
#include "geoloc/synth.hpp"

namespace geoloc {

struct LocalizationResult {
    std::string query_id;
    std::string method;  // domset | gmcp | nn1 | random | full_image
    GpsCoord predicted;
    GpsCoord truth;
    double error_m = 0.0;
    int n_clusters_used = 0;
    double runtime_ms = 0.0;
    bool fallback = false;  // domset selected nothing, nn1 answer substituted
};

struct DomsetParams {
    int k = 10;
    double sigma = 0.3;
    double alpha = 0.5;
    DistanceUnit unit = DistanceUnit::kilometers;
    SolverConfig solver;
};

void embed_records(std::vector<BuildingRecord>& records, const Embedder& e);

LocalizationResult localize_domset(const QueryGroup& query, const ReferenceIndex& index,
                                   const DomsetParams& params);
LocalizationResult localize_gmcp(const QueryGroup& query, const ReferenceIndex& index,
                                 const DomsetParams& params, int local_restarts = 10,
                                 std::uint64_t seed = 0);
LocalizationResult localize_nn1(const QueryGroup& query, const ReferenceIndex& index);
LocalizationResult localize_random(const QueryGroup& query, const ReferenceIndex& index,
                                   std::mt19937_64& rng);

// Whole-image baseline: one embedding per image from the normalized mean of
// its buildings' raw features, matched image-to-image.
struct ImageEntry {
    std::string image_id;
    GpsCoord gps;
    Embedding embedding;
};
std::vector<ImageEntry> build_image_index(const std::vector<BuildingRecord>& refs,
                                          const Embedder& e);
LocalizationResult localize_full_image(const QueryGroup& query,
                                       const std::vector<ImageEntry>& image_index,
                                       const Embedder& e);

struct AccuracyCurve {
    std::vector<double> thresholds_m;
    std::map<std::string, std::vector<double>> accuracy;  // method -> per-threshold
};
AccuracyCurve evaluate(const std::vector<LocalizationResult>& results,
                       const std::vector<double>& thresholds_m);

struct BenchRow {
    std::string method;  // domset | gmcp_exact
    int nc = 0;
    int k = 0;
    double median_ms = 0.0;
    std::uint64_t combinations = 0;
    bool skipped = false;
};
std::vector<BenchRow> bench_runtime(const std::vector<int>& nc_list,
                                    const std::vector<int>& k_list, int trials,
                                    std::uint64_t seed);

// Seeded random benchmark graph with NC clusters of k candidates each.
MatchGraph random_bench_graph(int nc, int k, std::uint64_t seed,
                              double sigma = 0.3, double alpha = 0.5);

// JSONL building records, one object per line.
std::vector<BuildingRecord> ingest_records(const std::string& path);
void emit_records(const std::vector<BuildingRecord>& records, const std::string& path);

// Results CSV: query_id,method,pred_lat,pred_lon,true_lat,true_lon,error_m,runtime_ms
void write_results_csv(const std::vector<LocalizationResult>& results,
                       const std::string& path, bool include_timings = true);
std::vector<LocalizationResult> read_results_csv(const std::string& path);

// Curves CSV: method,threshold_m,accuracy
void write_curve_csv(const AccuracyCurve& curve, const std::string& path);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);

// Group building records into query groups: per image (n_views = 1) or per
// location, merging the four heading images (n_views = 4).
std::vector<QueryGroup> group_queries(const std::vector<BuildingRecord>& records,
                                      int n_views);

}  // namespace geoloc
