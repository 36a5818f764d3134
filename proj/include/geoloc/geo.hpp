#pragma once

#include <span>
#include <vector>

namespace geoloc {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GpsCoord {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]
};

bool gps_valid(const GpsCoord& p);
void require_valid(const GpsCoord& p);

// Local equirectangular plane around an anchor, meters east/north.
struct LocalXY {
    double x = 0.0;
    double y = 0.0;
    GpsCoord anchor;
};

LocalXY project(const GpsCoord& p, const GpsCoord& anchor);
GpsCoord unproject(const LocalXY& q);

// Symmetric planar distance: both points projected around their midpoint.
double geo_distance_m(const GpsCoord& a, const GpsCoord& b);

// Arithmetic mean of lat/lon; valid at city-scale extents.
GpsCoord mean_gps(std::span<const GpsCoord> points);

}  // namespace geoloc
