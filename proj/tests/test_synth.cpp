#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "geoloc/errors.hpp"
#include "geoloc/synth.hpp"

using namespace geoloc;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.n_locations = 16;
    c.buildings_min = 2;
    c.buildings_max = 3;
    c.seed = 11;
    return c;
}

double raw_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("generate is bit-deterministic given the seed") {
    const SynthCity a = generate(small_config());
    const SynthCity b = generate(small_config());
    REQUIRE(a.street_records.size() == b.street_records.size());
    for (std::size_t i = 0; i < a.street_records.size(); ++i) {
        CHECK(a.street_records[i].id == b.street_records[i].id);
        CHECK(a.street_records[i].raw_features == b.street_records[i].raw_features);
        CHECK(a.street_records[i].det_score == b.street_records[i].det_score);
    }
    SynthConfig other = small_config();
    other.seed = 12;
    const SynthCity c = generate(other);
    CHECK(c.street_records[0].raw_features != a.street_records[0].raw_features);
}

TEST_CASE("zero dropout observes every building in both views") {
    SynthConfig cfg = small_config();
    cfg.detection_dropout_prob = 0.0;
    const SynthCity city = generate(cfg);
    CHECK(city.street_records.size() == city.bird_records.size());
    std::set<std::string> street_keys, bird_keys;
    for (const auto& r : city.street_records) street_keys.insert(match_key(r.id));
    for (const auto& r : city.bird_records) bird_keys.insert(match_key(r.id));
    CHECK(street_keys == bird_keys);
}

TEST_CASE("record GPS equals its image location and headings are canonical") {
    const SynthCity city = generate(small_config());
    for (const auto& r : city.street_records) {
        const int loc = city.location_of_record.at(r.id);
        CHECK(r.gps.lat == city.locations[loc].lat);
        CHECK(r.gps.lon == city.locations[loc].lon);
        CHECK((r.heading_deg == 0 || r.heading_deg == 90 || r.heading_deg == 180 ||
               r.heading_deg == 270));
    }
}

TEST_CASE("with zero noise, matched raw distance equals the view-offset gap") {
    SynthConfig cfg = small_config();
    cfg.feature_noise_sigma = 0.0;
    cfg.detection_dropout_prob = 0.0;
    const SynthCity city = generate(cfg);

    const auto off_s = view_offset(View::street, cfg.raw_dim, cfg.view_offset_sigma);
    const auto off_b = view_offset(View::bird, cfg.raw_dim, cfg.view_offset_sigma);
    const double gap = raw_distance(off_s, off_b);

    std::vector<double> matched, unmatched;
    for (std::size_t i = 0; i < city.street_records.size(); ++i) {
        for (std::size_t j = 0; j < city.bird_records.size(); ++j) {
            const double d = raw_distance(city.street_records[i].raw_features,
                                          city.bird_records[j].raw_features);
            if (match_key(city.street_records[i].id) == match_key(city.bird_records[j].id))
                matched.push_back(d);
            else if (j % 17 == 0)
                unmatched.push_back(d);
        }
    }
    for (double d : matched) CHECK(d == doctest::Approx(gap).epsilon(1e-9));

    // the offset gap sits inside the unmatched distribution: raw features
    // alone do not separate matches, which is what the learned metric is for
    std::sort(unmatched.begin(), unmatched.end());
    CHECK(unmatched.front() < gap);
    CHECK(gap < unmatched.back());
}

TEST_CASE("cross-view signal exists at default noise") {
    const SynthCity city = generate(small_config());
    double matched_sum = 0.0, unmatched_sum = 0.0;
    int nm = 0, nu = 0;
    for (std::size_t i = 0; i < city.street_records.size(); ++i) {
        for (std::size_t j = 0; j < city.bird_records.size(); ++j) {
            const double d = raw_distance(city.street_records[i].raw_features,
                                          city.bird_records[j].raw_features);
            if (match_key(city.street_records[i].id) == match_key(city.bird_records[j].id)) {
                matched_sum += d;
                ++nm;
            } else if (j % 13 == 0) {
                unmatched_sum += d;
                ++nu;
            }
        }
    }
    REQUIRE(nm > 0);
    CHECK(matched_sum / nm < unmatched_sum / nu);
}

TEST_CASE("make_pair_dataset ratio and consistency") {
    SynthConfig cfg = small_config();
    cfg.detection_dropout_prob = 0.0;
    const SynthCity city = generate(cfg);
    const auto pairs = make_pair_dataset(city, 20, 3);
    std::size_t pos = 0, neg = 0;
    for (const auto& p : pairs) (p.label ? pos : neg)++;
    CHECK(pos == city.street_records.size());
    CHECK(neg == 20 * pos);

    // no positive pair reappears as a negative
    std::set<std::pair<const void*, const void*>> seen;
    for (const auto& p : pairs) {
        if (p.label) continue;
        CHECK(p.x_raw != p.y_raw);
    }

    const auto again = make_pair_dataset(city, 20, 3);
    REQUIRE(again.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(again[i].label == pairs[i].label);
        CHECK(again[i].x_raw == pairs[i].x_raw);
    }
}

TEST_CASE("make_query_set: 4-view supersets, truth GPS, determinism") {
    const SynthCity city = generate(small_config());
    const auto q1 = make_query_set(city, View::street, 1, 5);
    const auto q4 = make_query_set(city, View::street, 4, 5);
    REQUIRE(q1.size() == q4.size());
    for (std::size_t i = 0; i < q1.size(); ++i) {
        CHECK(q4[i].buildings.size() >= q1[i].buildings.size());
        for (const auto& b : q4[i].buildings) {
            CHECK(b.gps.lat == q4[i].truth.lat);
            CHECK(b.gps.lon == q4[i].truth.lon);
        }
    }
    CHECK_THROWS_AS(make_query_set(city, View::street, 2, 5), UsageError);
}

TEST_CASE("split_locations is a disjoint cover") {
    const auto [train, test] = split_locations(20, 0.25, 9);
    CHECK(train.size() + test.size() == 20);
    CHECK(test.size() == 5);
    for (int t : test) CHECK(!train.count(t));

    // query sets restricted to the split are disjoint by query id
    const SynthCity city = generate(small_config());
    const auto [tr, te] = split_locations(city.config.n_locations, 0.25, 9);
    const auto qa = make_query_set(city, View::street, 4, 1, tr);
    const auto qb = make_query_set(city, View::street, 4, 1, te);
    std::set<std::string> ids;
    for (const auto& q : qa) ids.insert(q.query_id);
    for (const auto& q : qb) CHECK(!ids.count(q.query_id));
}

TEST_CASE("generate validates its config") {
    SynthConfig cfg = small_config();
    cfg.n_locations = 0;
    CHECK_THROWS_AS(generate(cfg), UsageError);
    cfg = small_config();
    cfg.buildings_min = 4;
    cfg.buildings_max = 2;
    CHECK_THROWS_AS(generate(cfg), UsageError);
}
