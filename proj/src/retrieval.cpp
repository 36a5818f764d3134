#include "geoloc/retrieval.hpp"

#include <algorithm>

#include "geoloc/errors.hpp"

namespace geoloc {

const char* view_name(View v) { return v == View::street ? "street" : "bird"; }

View parse_view(const std::string& s) {
    if (s == "street") return View::street;
    if (s == "bird") return View::bird;
    throw DataError("unknown view '" + s + "' (expected street or bird)");
}

ReferenceIndex::ReferenceIndex(std::vector<BuildingRecord> refs)
    : records_(std::move(refs)) {
    if (records_.empty()) throw DataError("build_index: empty reference set");
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.embedding.empty() || !is_normalized(r.embedding, 1e-6))
            throw DataError("build_index: record " + r.id + " lacks a normalized embedding");
        require_valid(r.gps);
        if (!by_id_.emplace(r.id, i).second)
            throw DataError("build_index: duplicate record id " + r.id);
    }
}

const BuildingRecord& ReferenceIndex::by_id(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw DataError("index: unknown record id " + id);
    return records_[it->second];
}

CandidateCluster ReferenceIndex::knn(const BuildingRecord& query, int k) const {
    if (k < 1) throw UsageError("knn: k must be >= 1");
    if (query.embedding.empty() || !is_normalized(query.embedding, 1e-6))
        throw DataError("knn: query " + query.id + " lacks a normalized embedding");

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(records_.size());
    for (const auto& r : records_) {
        if (r.view == query.view) continue;  // cross-view only
        scored.emplace_back(r.id, similarity(query.embedding, r.embedding));
    }
    if (scored.empty())
        throw DataError("knn: no cross-view references for query " + query.id);

    // descending s, ties by ascending id
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(k);

    CandidateCluster c;
    c.query_id = query.id;
    c.members = std::move(scored);
    return c;
}

ReferenceIndex build_index(std::vector<BuildingRecord> refs) {
    return ReferenceIndex(std::move(refs));
}

}  // namespace geoloc
