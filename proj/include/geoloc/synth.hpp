#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoloc/geo.hpp"
#include "geoloc/metric.hpp"
#include "geoloc/retrieval.hpp"

namespace geoloc {

inline constexpr int kHeadings[4] = {0, 90, 180, 270};

struct SynthConfig {
    std::string city = "synthA";
    GpsCoord origin{40.7000, -74.0000};
    int n_locations = 400;
    double grid_spacing_m = 80.0;
    int buildings_min = 2;  // latent buildings per heading image
    int buildings_max = 6;
    int raw_dim = 64;
    double feature_noise_sigma = 0.15;
    double view_offset_sigma = 4.0;
    double detection_dropout_prob = 0.1;
    int negatives_per_positive = 20;
    std::uint64_t seed = 0;
};

// A generated city: per-location images in both views with noisy observations
// of shared latent building features. Record ids end in ":street"/":bird";
// stripping that suffix yields the latent building key, so cross-view matches
// are recoverable from ids alone.
struct SynthCity {
    SynthConfig config;
    std::vector<GpsCoord> locations;
    std::vector<BuildingRecord> street_records;
    std::vector<BuildingRecord> bird_records;
    std::unordered_map<std::string, int> location_of_record;  // record id -> location index
};

SynthCity generate(const SynthConfig& config);

// Latent building key shared by the two views of one building.
std::string match_key(const std::string& record_id);

// Per-view offset added to every observation in that view; fixed across cities
// so embedders transfer between them.
std::vector<double> view_offset(View v, int dim, double sigma);

// All matched cross-view pairs as positives plus uniformly sampled unmatched
// cross-view negatives at the given ratio. Optional restriction to a location
// subset (for held-out evaluation splits).
std::vector<PairSample> make_pair_dataset(
    const SynthCity& city, int negatives_per_positive, std::uint64_t seed,
    const std::optional<std::set<int>>& locations = std::nullopt);

struct QueryGroup {
    std::string query_id;
    GpsCoord truth;
    std::vector<BuildingRecord> buildings;
};

// One query per location: all four heading images of the view (n_views = 4)
// or a single seeded-random heading (n_views = 1).
std::vector<QueryGroup> make_query_set(
    const SynthCity& city, View view, int n_views, std::uint64_t seed,
    const std::optional<std::set<int>>& locations = std::nullopt);

// Disjoint train/test location split.
std::pair<std::set<int>, std::set<int>> split_locations(int n_locations,
                                                        double test_fraction,
                                                        std::uint64_t seed);

}  // namespace geoloc
