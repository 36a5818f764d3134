#include "geoloc/geo.hpp"

#include <cmath>
#include <cstdio>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

bool gps_valid(const GpsCoord& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) &&
           p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

void require_valid(const GpsCoord& p) {
    if (!gps_valid(p)) {
        throw DataError("invalid GPS coordinate (lat=" + std::to_string(p.lat) +
                        ", lon=" + std::to_string(p.lon) + ")");
    }
}

LocalXY project(const GpsCoord& p, const GpsCoord& anchor) {
    require_valid(p);
    require_valid(anchor);
    const double dlat = (p.lat - anchor.lat) * kDegToRad;
    const double dlon = (p.lon - anchor.lon) * kDegToRad;
    LocalXY q;
    q.x = kEarthRadiusM * std::cos(anchor.lat * kDegToRad) * dlon;
    q.y = kEarthRadiusM * dlat;
    q.anchor = anchor;
    if (q.x * q.x + q.y * q.y > 100000.0 * 100000.0) {
        std::fprintf(stderr, "warning: projecting point %.5f,%.5f more than 100 km from anchor\n",
                     p.lat, p.lon);
    }
    return q;
}

GpsCoord unproject(const LocalXY& q) {
    GpsCoord p;
    p.lat = q.anchor.lat + q.y / kEarthRadiusM / kDegToRad;
    p.lon = q.anchor.lon + q.x / (kEarthRadiusM * std::cos(q.anchor.lat * kDegToRad)) / kDegToRad;
    return p;
}

double geo_distance_m(const GpsCoord& a, const GpsCoord& b) {
    require_valid(a);
    require_valid(b);
    if (a.lat == b.lat && a.lon == b.lon) return 0.0;
    const GpsCoord mid{0.5 * (a.lat + b.lat), 0.5 * (a.lon + b.lon)};
    const LocalXY pa = project(a, mid);
    const LocalXY pb = project(b, mid);
    return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

GpsCoord mean_gps(std::span<const GpsCoord> points) {
    if (points.empty()) throw DataError("mean_gps: empty selection");
    double lat = 0.0, lon = 0.0;
    for (const auto& p : points) {
        require_valid(p);
        lat += p.lat;
        lon += p.lon;
    }
    return {lat / static_cast<double>(points.size()),
            lon / static_cast<double>(points.size())};
}

}  // namespace geoloc
