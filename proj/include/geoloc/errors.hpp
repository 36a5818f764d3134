#pragma once

#include <stdexcept>
#include <string>

namespace geoloc {

// Exit-code taxonomy: 1 usage, 2 data, 3 budget/scale.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ScaleError : std::runtime_error {
    explicit ScaleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace geoloc
