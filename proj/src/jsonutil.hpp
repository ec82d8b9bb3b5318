#pragma once

#include <string>

#include "json.hpp"

#include "errors.hpp"

// Canonical JSON conventions shared by every report and plan document:
// keys serialize in sorted order (nlohmann::json's natural order), floats are
// rounded to 6 decimals on insertion, documents end with a newline.
namespace spm::jsonutil {

using json = nlohmann::json;

inline double round6(double x) {
    double r = std::round(x * 1e6) / 1e6;
    if (r == 0.0) r = 0.0;  // normalize -0
    return r;
}

inline std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

inline json parse(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        fail(ErrorCode::Format, "invalid JSON in " + what);
    return j;
}

// Lookup helpers that turn missing/mistyped fields into Format errors naming
// the offending key.
inline const json& require(const json& j, const std::string& key, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end())
        fail(ErrorCode::Format, what + ": missing field \"" + key + "\"");
    return *it;
}

inline double require_number(const json& j, const std::string& key, const std::string& what) {
    const json& v = require(j, key, what);
    if (!v.is_number())
        fail(ErrorCode::Format, what + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

inline std::string require_string(const json& j, const std::string& key, const std::string& what) {
    const json& v = require(j, key, what);
    if (!v.is_string())
        fail(ErrorCode::Format, what + ": field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

}  // namespace spm::jsonutil
