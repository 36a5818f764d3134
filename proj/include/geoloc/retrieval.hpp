#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geoloc/geo.hpp"
#include "geoloc/metric.hpp"

namespace geoloc {

enum class View { street, bird };

const char* view_name(View v);
View parse_view(const std::string& s);

struct BuildingRecord {
    std::string id;
    std::string city;
    std::string image_id;
    View view = View::street;
    int heading_deg = 0;  // one of 0, 90, 180, 270
    GpsCoord gps;
    std::vector<double> raw_features;
    Embedding embedding;  // empty until the embed stage runs
    double det_score = 1.0;
};

// k retrieved reference buildings for one query building, best first.
struct CandidateCluster {
    std::string query_id;
    std::vector<std::pair<std::string, double>> members;  // (ref_id, s_i), s descending
};

class ReferenceIndex {
public:
    explicit ReferenceIndex(std::vector<BuildingRecord> refs);

    std::size_t size() const { return records_.size(); }
    const std::vector<BuildingRecord>& records() const { return records_; }
    const BuildingRecord& by_id(const std::string& id) const;
    GpsCoord gps_of(const std::string& id) const { return by_id(id).gps; }

    // Exact linear-scan k-NN restricted to the view opposite the query's.
    CandidateCluster knn(const BuildingRecord& query, int k) const;

private:
    std::vector<BuildingRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

ReferenceIndex build_index(std::vector<BuildingRecord> refs);

}  // namespace geoloc
