#include "geoloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {

std::string loc_tag(int loc) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "L%03d", loc);
    return buf;
}

}  // namespace

std::string match_key(const std::string& record_id) {
    const auto pos = record_id.rfind(':');
    if (pos == std::string::npos) throw DataError("match_key: malformed record id " + record_id);
    return record_id.substr(0, pos);
}

std::vector<double> view_offset(View v, int dim, double sigma) {
    // Fixed internal seed per view: the street/bird appearance gap is a
    // property of the viewpoints, not of any particular city.
    std::mt19937_64 rng(v == View::street ? 0x5772ee7u : 0xb17d5eeu);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<double> off(dim);
    for (double& x : off) x = g(rng);
    return off;
}

SynthCity generate(const SynthConfig& config) {
    if (config.n_locations <= 0) throw UsageError("generate: n_locations must be positive");
    if (config.grid_spacing_m <= 0.0) throw UsageError("generate: grid spacing must be positive");
    if (config.buildings_min < 1 || config.buildings_max < config.buildings_min)
        throw UsageError("generate: bad buildings-per-image range");
    if (config.feature_noise_sigma < 0.0 || config.detection_dropout_prob < 0.0 ||
        config.detection_dropout_prob > 1.0)
        throw UsageError("generate: bad noise or dropout parameters");

    SynthCity city;
    city.config = config;

    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.n_locations))));
    const double dlat = config.grid_spacing_m / (kEarthRadiusM * 3.14159265358979323846 / 180.0);
    const double dlon = dlat / std::cos(config.origin.lat * 3.14159265358979323846 / 180.0);
    for (int i = 0; i < config.n_locations; ++i) {
        GpsCoord p{config.origin.lat + (i / side) * dlat, config.origin.lon + (i % side) * dlon};
        require_valid(p);
        city.locations.push_back(p);
    }

    const auto off_s = view_offset(View::street, config.raw_dim, config.view_offset_sigma);
    const auto off_b = view_offset(View::bird, config.raw_dim, config.view_offset_sigma);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> latent(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, config.feature_noise_sigma);
    std::uniform_int_distribution<int> nb_dist(config.buildings_min, config.buildings_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int loc = 0; loc < config.n_locations; ++loc) {
        for (int h : kHeadings) {
            const int nb = nb_dist(rng);
            for (int b = 0; b < nb; ++b) {
                char key[96];
                std::snprintf(key, sizeof key, "%s:%s:H%03d:B%d", config.city.c_str(),
                              loc_tag(loc).c_str(), h, b);
                std::vector<double> u(config.raw_dim);
                for (double& x : u) x = latent(rng);

                for (View v : {View::street, View::bird}) {
                    const auto& off = (v == View::street) ? off_s : off_b;
                    BuildingRecord r;
                    r.id = std::string(key) + ':' + view_name(v);
                    r.city = config.city;
                    r.image_id = config.city + ':' + loc_tag(loc) + ':' + view_name(v) +
                                 ":H" + (h < 100 ? (h < 10 ? "00" : "0") : "") + std::to_string(h);
                    r.view = v;
                    r.heading_deg = h;
                    r.gps = city.locations[loc];
                    r.raw_features.resize(config.raw_dim);
                    for (int d = 0; d < config.raw_dim; ++d)
                        r.raw_features[d] = u[d] + off[d] + noise(rng);
                    r.det_score = 0.5 + 0.5 * unit(rng);
                    const bool dropped = unit(rng) < config.detection_dropout_prob;
                    if (!dropped) {
                        city.location_of_record.emplace(r.id, loc);
                        (v == View::street ? city.street_records : city.bird_records)
                            .push_back(std::move(r));
                    }
                }
            }
        }
    }
    return city;
}

std::vector<PairSample> make_pair_dataset(
    const SynthCity& city, int negatives_per_positive, std::uint64_t seed,
    const std::optional<std::set<int>>& locations) {
    if (city.street_records.empty() || city.bird_records.empty())
        throw DataError("make_pair_dataset: city lacks records in one view");

    auto in_split = [&](const BuildingRecord& r) {
        if (!locations) return true;
        return locations->count(city.location_of_record.at(r.id)) > 0;
    };

    std::vector<const BuildingRecord*> streets, birds;
    for (const auto& r : city.street_records)
        if (in_split(r)) streets.push_back(&r);
    for (const auto& r : city.bird_records)
        if (in_split(r)) birds.push_back(&r);
    if (streets.empty() || birds.empty())
        throw DataError("make_pair_dataset: location split leaves a view empty");

    std::unordered_map<std::string, const BuildingRecord*> bird_by_key;
    for (const auto* r : birds) bird_by_key.emplace(match_key(r->id), r);

    std::vector<PairSample> out;
    for (const auto* s : streets) {
        auto it = bird_by_key.find(match_key(s->id));
        if (it == bird_by_key.end()) continue;
        out.push_back({s->raw_features, it->second->raw_features, 1});
    }
    const std::size_t n_pos = out.size();
    if (n_pos == 0) throw DataError("make_pair_dataset: no matched cross-view pairs");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> ps(0, streets.size() - 1);
    std::uniform_int_distribution<std::size_t> pb(0, birds.size() - 1);
    std::set<std::pair<std::size_t, std::size_t>> used;
    const std::size_t want = n_pos * static_cast<std::size_t>(negatives_per_positive);
    std::size_t attempts = 0;
    while (used.size() < want && attempts < want * 50 + 1000) {
        ++attempts;
        const std::size_t i = ps(rng), j = pb(rng);
        if (match_key(streets[i]->id) == match_key(birds[j]->id)) continue;
        used.emplace(i, j);
    }
    for (const auto& [i, j] : used)
        out.push_back({streets[i]->raw_features, birds[j]->raw_features, 0});
    return out;
}

std::vector<QueryGroup> make_query_set(
    const SynthCity& city, View view, int n_views, std::uint64_t seed,
    const std::optional<std::set<int>>& locations) {
    if (n_views != 1 && n_views != 4) throw UsageError("make_query_set: n_views must be 1 or 4");
    const auto& records = (view == View::street) ? city.street_records : city.bird_records;
    if (records.empty()) throw DataError("make_query_set: view has no records");

    std::vector<std::vector<const BuildingRecord*>> per_loc(city.locations.size());
    for (const auto& r : records)
        per_loc[city.location_of_record.at(r.id)].push_back(&r);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_heading(0, 3);
    std::vector<QueryGroup> out;
    for (std::size_t loc = 0; loc < city.locations.size(); ++loc) {
        if (locations && !locations->count(static_cast<int>(loc))) continue;
        const int heading = kHeadings[pick_heading(rng)];  // drawn per location either way
        if (per_loc[loc].empty()) continue;
        QueryGroup q;
        q.truth = city.locations[loc];
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s:%s:%s:%dv", city.config.city.c_str(),
                      loc_tag(static_cast<int>(loc)).c_str(), view_name(view), n_views);
        q.query_id = buf;
        for (const auto* r : per_loc[loc])
            if (n_views == 4 || r->heading_deg == heading) q.buildings.push_back(*r);
        if (!q.buildings.empty()) out.push_back(std::move(q));
    }
    return out;
}

std::pair<std::set<int>, std::set<int>> split_locations(int n_locations,
                                                        double test_fraction,
                                                        std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw UsageError("split_locations: test fraction must be in (0, 1)");
    std::vector<int> ids(n_locations);
    std::iota(ids.begin(), ids.end(), 0);
    std::mt19937_64 rng(seed ^ 0x5e17f00du);
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(test_fraction * n_locations)));
    std::set<int> test(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::set<int> train(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
    return {train, test};
}

}  // namespace geoloc
