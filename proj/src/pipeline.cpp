#include "geoloc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

LocalizationResult finish(LocalizationResult r, Clock::time_point t0) {
    r.error_m = geo_distance_m(r.predicted, r.truth);
    r.runtime_ms = ms_since(t0);
    return r;
}

std::vector<CandidateCluster> retrieve_clusters(const QueryGroup& query,
                                                const ReferenceIndex& index, int k) {
    if (query.buildings.empty()) throw DataError("localize: query has no buildings");
    std::vector<CandidateCluster> clusters;
    clusters.reserve(query.buildings.size());
    for (const auto& b : query.buildings) clusters.push_back(index.knn(b, k));
    return clusters;
}

GpsCoord mean_of_refs(const ReferenceIndex& index, const std::vector<std::string>& ids) {
    std::vector<GpsCoord> pts;
    pts.reserve(ids.size());
    for (const auto& id : ids) pts.push_back(index.gps_of(id));
    return mean_gps(pts);
}

int best_similarity_node(const MatchGraph& g) {
    int best = 0;
    for (int i = 1; i < g.n; ++i)
        if (g.nodes[i].s > g.nodes[best].s ||
            (g.nodes[i].s == g.nodes[best].s && g.nodes[i].ref_id < g.nodes[best].ref_id))
            best = i;
    return best;
}

}  // namespace

void embed_records(std::vector<BuildingRecord>& records, const Embedder& e) {
    for (auto& r : records) r.embedding = e.embed(r.raw_features);
}

LocalizationResult localize_domset(const QueryGroup& query, const ReferenceIndex& index,
                                   const DomsetParams& params) {
    const auto t0 = Clock::now();
    LocalizationResult r;
    r.query_id = query.query_id;
    r.method = "domset";
    r.truth = query.truth;

    const auto clusters = retrieve_clusters(query, index, params.k);
    const MatchGraph g = build_graph(
        clusters, [&](const std::string& id) { return index.gps_of(id); },
        params.sigma, params.alpha, params.unit);

    if (!g.has_edges()) {
        // single-cluster query: no inter-cluster edges exist, degenerate pick
        const int node = best_similarity_node(g);
        r.predicted = g.nodes[node].gps;
        r.n_clusters_used = 1;
        return finish(r, t0);
    }

    const DominantSetResult ds = solve(g, params.solver);
    const auto selection = select_per_cluster(ds, g);
    if (selection.empty()) {
        LocalizationResult nn = localize_nn1(query, index);
        nn.method = "domset";
        nn.fallback = true;
        nn.runtime_ms = ms_since(t0);
        return nn;
    }
    std::vector<std::string> ids;
    for (const auto& [cluster, id] : selection) ids.push_back(id);
    r.predicted = mean_of_refs(index, ids);
    r.n_clusters_used = static_cast<int>(ids.size());
    return finish(r, t0);
}

LocalizationResult localize_gmcp(const QueryGroup& query, const ReferenceIndex& index,
                                 const DomsetParams& params, int local_restarts,
                                 std::uint64_t seed) {
    const auto t0 = Clock::now();
    LocalizationResult r;
    r.query_id = query.query_id;
    r.method = "gmcp";
    r.truth = query.truth;

    const auto clusters = retrieve_clusters(query, index, params.k);
    const MatchGraph g = build_graph(
        clusters, [&](const std::string& id) { return index.gps_of(id); },
        params.sigma, params.alpha, params.unit);

    GmcpSolution sol;
    if (enumeration_count(g) <= kGmcpEnumerationBudget) {
        sol = solve_exact(g);
    } else {
        sol = solve_local(g, local_restarts, seed);
    }
    std::vector<std::string> ids;
    for (int node : sol.selection) ids.push_back(g.nodes[node].ref_id);
    r.predicted = mean_of_refs(index, ids);
    r.n_clusters_used = static_cast<int>(ids.size());
    return finish(r, t0);
}

LocalizationResult localize_nn1(const QueryGroup& query, const ReferenceIndex& index) {
    const auto t0 = Clock::now();
    LocalizationResult r;
    r.query_id = query.query_id;
    r.method = "nn1";
    r.truth = query.truth;
    if (query.buildings.empty()) throw DataError("localize_nn1: query has no buildings");
    std::vector<GpsCoord> tops;
    for (const auto& b : query.buildings) {
        const auto c = index.knn(b, 1);
        tops.push_back(index.gps_of(c.members.front().first));
    }
    r.predicted = mean_gps(tops);
    r.n_clusters_used = static_cast<int>(tops.size());
    return finish(r, t0);
}

LocalizationResult localize_random(const QueryGroup& query, const ReferenceIndex& index,
                                   std::mt19937_64& rng) {
    const auto t0 = Clock::now();
    LocalizationResult r;
    r.query_id = query.query_id;
    r.method = "random";
    r.truth = query.truth;
    std::uniform_int_distribution<std::size_t> pick(0, index.size() - 1);
    r.predicted = index.records()[pick(rng)].gps;
    return finish(r, t0);
}

std::vector<ImageEntry> build_image_index(const std::vector<BuildingRecord>& refs,
                                          const Embedder& e) {
    std::map<std::string, std::vector<const BuildingRecord*>> by_image;
    for (const auto& r : refs) by_image[r.image_id].push_back(&r);
    std::vector<ImageEntry> out;
    for (const auto& [image_id, records] : by_image) {
        std::vector<double> mean(records.front()->raw_features.size(), 0.0);
        for (const auto* r : records)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += r->raw_features[d];
        for (double& v : mean) v /= static_cast<double>(records.size());
        out.push_back({image_id, records.front()->gps, e.embed(mean)});
    }
    return out;
}

LocalizationResult localize_full_image(const QueryGroup& query,
                                       const std::vector<ImageEntry>& image_index,
                                       const Embedder& e) {
    const auto t0 = Clock::now();
    LocalizationResult r;
    r.query_id = query.query_id;
    r.method = "full_image";
    r.truth = query.truth;
    if (image_index.empty()) throw DataError("localize_full_image: empty image index");

    std::map<std::string, std::vector<const BuildingRecord*>> by_image;
    for (const auto& b : query.buildings) by_image[b.image_id].push_back(&b);

    double best_s = -1.0;
    GpsCoord best_gps;
    for (const auto& [image_id, records] : by_image) {
        std::vector<double> mean(records.front()->raw_features.size(), 0.0);
        for (const auto* b : records)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += b->raw_features[d];
        for (double& v : mean) v /= static_cast<double>(records.size());
        const Embedding q = e.embed(mean);
        for (const auto& entry : image_index) {
            const double s = similarity(q, entry.embedding);
            if (s > best_s) {
                best_s = s;
                best_gps = entry.gps;
            }
        }
    }
    r.predicted = best_gps;
    return finish(r, t0);
}

AccuracyCurve evaluate(const std::vector<LocalizationResult>& results,
                       const std::vector<double>& thresholds_m) {
    if (results.empty()) throw DataError("evaluate: no results");
    if (!std::is_sorted(thresholds_m.begin(), thresholds_m.end()))
        throw UsageError("evaluate: thresholds must be ascending");
    AccuracyCurve curve;
    curve.thresholds_m = thresholds_m;
    std::map<std::string, std::vector<double>> errors;
    for (const auto& r : results) errors[r.method].push_back(r.error_m);
    for (const auto& [method, errs] : errors) {
        std::vector<double> acc;
        for (double t : thresholds_m) {
            std::size_t hit = 0;
            for (double e : errs) hit += (e <= t);
            acc.push_back(static_cast<double>(hit) / static_cast<double>(errs.size()));
        }
        curve.accuracy
            .emplace(method, std::move(acc));
    }
    return curve;
}

MatchGraph random_bench_graph(int nc, int k, std::uint64_t seed, double sigma,
                              double alpha) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const GpsCoord origin{40.7, -74.0};
    const double span_deg = 2000.0 / 111194.9;  // ~2 km box
    std::vector<CandidateCluster> clusters;
    std::map<std::string, GpsCoord> gps;
    for (int c = 0; c < nc; ++c) {
        CandidateCluster cl;
        cl.query_id = "bench_q" + std::to_string(c);
        for (int i = 0; i < k; ++i) {
            const std::string id = "bench_c" + std::to_string(c) + "_n" + std::to_string(i);
            gps[id] = {origin.lat + unit(rng) * span_deg, origin.lon + unit(rng) * span_deg};
            cl.members.emplace_back(id, unit(rng));
        }
        std::sort(cl.members.begin(), cl.members.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });
        clusters.push_back(std::move(cl));
    }
    return build_graph(clusters, [&](const std::string& id) { return gps.at(id); },
                       sigma, alpha);
}

namespace {

// Per-call milliseconds, amortized over enough repetitions to beat timer noise.
template <typename Fn>
double time_call_ms(Fn&& fn) {
    fn();  // warm-up
    int reps = 1;
    for (;;) {
        const auto t0 = Clock::now();
        for (int i = 0; i < reps; ++i) fn();
        const double elapsed = ms_since(t0);
        if (elapsed >= 20.0 || reps >= (1 << 22)) return elapsed / reps;
        reps *= 2;
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> bench_runtime(const std::vector<int>& nc_list,
                                    const std::vector<int>& k_list, int trials,
                                    std::uint64_t seed) {
    if (trials < 1) throw UsageError("bench_runtime: trials must be >= 1");
    std::vector<BenchRow> rows;
    for (int nc : nc_list) {
        for (int k : k_list) {
            std::vector<double> ds_ms, gm_ms;
            std::uint64_t combos = 0;
            bool gm_skipped = false;
            for (int t = 0; t < trials; ++t) {
                const MatchGraph g =
                    random_bench_graph(nc, k, seed + 1000003ULL * t + 17ULL * nc + k);
                combos = enumeration_count(g);
                ds_ms.push_back(time_call_ms([&] { (void)solve(g); }));
                if (combos <= kGmcpEnumerationBudget) {
                    gm_ms.push_back(time_call_ms([&] { (void)solve_exact(g); }));
                } else {
                    gm_skipped = true;
                }
            }
            rows.push_back({"domset", nc, k, median(ds_ms), combos, false});
            rows.push_back({"gmcp_exact", nc, k, gm_skipped ? 0.0 : median(gm_ms), combos,
                            gm_skipped});
        }
    }
    return rows;
}

std::vector<BuildingRecord> ingest_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("ingest: cannot open " + path);
    static const std::set<std::string> known = {
        "id",  "city", "image_id", "view",         "heading_deg",
        "lat", "lon",  "raw_features", "embedding", "det_score"};
    std::set<std::string> warned;
    std::vector<BuildingRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw DataError("ingest: " + path + ":" + std::to_string(lineno) +
                            ": malformed JSON: " + ex.what());
        }
        for (const auto& [key, value] : j.items()) {
            if (!known.count(key) && warned.insert(key).second)
                std::fprintf(stderr, "warning: %s:%d: ignoring unknown field '%s'\n",
                             path.c_str(), lineno, key.c_str());
        }
        auto need = [&](const char* field) -> const nlohmann::json& {
            if (!j.contains(field))
                throw DataError("ingest: " + path + ":" + std::to_string(lineno) +
                                ": missing required field '" + field + "'");
            return j.at(field);
        };
        try {
            BuildingRecord r;
            r.id = need("id").get<std::string>();
            r.city = j.value("city", std::string{});
            r.image_id = need("image_id").get<std::string>();
            r.view = parse_view(need("view").get<std::string>());
            r.heading_deg = need("heading_deg").get<int>();
            r.gps = {need("lat").get<double>(), need("lon").get<double>()};
            require_valid(r.gps);
            r.raw_features = need("raw_features").get<std::vector<double>>();
            if (j.contains("embedding") && !j.at("embedding").is_null())
                r.embedding = j.at("embedding").get<std::vector<double>>();
            r.det_score = need("det_score").get<double>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& ex) {
            throw DataError("ingest: " + path + ":" + std::to_string(lineno) +
                            ": bad field type: " + ex.what());
        }
    }
    return out;
}

void emit_records(const std::vector<BuildingRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("emit: cannot open " + path);
    for (const auto& r : records) {
        nlohmann::json j{{"id", r.id},
                         {"city", r.city},
                         {"image_id", r.image_id},
                         {"view", view_name(r.view)},
                         {"heading_deg", r.heading_deg},
                         {"lat", r.gps.lat},
                         {"lon", r.gps.lon},
                         {"raw_features", r.raw_features},
                         {"det_score", r.det_score}};
        if (!r.embedding.empty()) j["embedding"] = r.embedding;
        out << j.dump() << '\n';
    }
}

void write_results_csv(const std::vector<LocalizationResult>& results,
                       const std::string& path, bool include_timings) {
    std::ofstream out(path);
    if (!out) throw DataError("write_results_csv: cannot open " + path);
    out << "query_id,method,pred_lat,pred_lon,true_lat,true_lon,error_m,runtime_ms\n";
    for (const auto& r : results) {
        out << r.query_id << ',' << r.method << ',' << fmt_g(r.predicted.lat) << ','
            << fmt_g(r.predicted.lon) << ',' << fmt_g(r.truth.lat) << ','
            << fmt_g(r.truth.lon) << ',' << fmt_g(r.error_m) << ','
            << fmt_g(include_timings ? r.runtime_ms : 0.0) << '\n';
    }
}

std::vector<LocalizationResult> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_results_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "query_id,method,pred_lat,pred_lon,true_lat,true_lon,error_m,runtime_ms")
        throw DataError("read_results_csv: bad header in " + path);
    std::vector<LocalizationResult> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8)
            throw DataError("read_results_csv: " + path + ":" + std::to_string(lineno) +
                            ": expected 8 fields");
        LocalizationResult r;
        r.query_id = fields[0];
        r.method = fields[1];
        r.predicted = {std::stod(fields[2]), std::stod(fields[3])};
        r.truth = {std::stod(fields[4]), std::stod(fields[5])};
        r.error_m = std::stod(fields[6]);
        r.runtime_ms = std::stod(fields[7]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_curve_csv(const AccuracyCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_curve_csv: cannot open " + path);
    out << "method,threshold_m,accuracy\n";
    for (const auto& [method, acc] : curve.accuracy)
        for (std::size_t i = 0; i < curve.thresholds_m.size(); ++i)
            out << method << ',' << fmt_g(curve.thresholds_m[i]) << ',' << fmt_g(acc[i])
                << '\n';
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_bench_csv: cannot open " + path);
    out << "method,nc,k,median_ms,combinations,skipped\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.nc << ',' << r.k << ',' << fmt_g(r.median_ms) << ','
            << r.combinations << ',' << (r.skipped ? 1 : 0) << '\n';
}

std::vector<QueryGroup> group_queries(const std::vector<BuildingRecord>& records,
                                      int n_views) {
    if (n_views != 1 && n_views != 4) throw UsageError("group_queries: n_views must be 1 or 4");
    auto location_key = [](const std::string& image_id) {
        const auto pos = image_id.rfind(":H");
        return pos == std::string::npos ? image_id : image_id.substr(0, pos);
    };
    std::map<std::string, QueryGroup> groups;
    for (const auto& r : records) {
        const std::string key = n_views == 1 ? r.image_id : location_key(r.image_id);
        auto& g = groups[key];
        if (g.buildings.empty()) {
            g.query_id = key + ":" + std::to_string(n_views) + "v";
            g.truth = r.gps;
        }
        g.buildings.push_back(r);
    }
    std::vector<QueryGroup> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) out.push_back(std::move(g));
    return out;
}

}  // namespace geoloc
