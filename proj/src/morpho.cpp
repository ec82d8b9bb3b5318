#include "morpho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "postseg.hpp"

namespace spm::morpho {

using jsonutil::round6;
using volgrid::Dims;

namespace {

constexpr const char* kAlgorithm = "column-median-gap/1";

void check_canonical(const LabelMap& m) {
    if (!m.orientation().is_canonical())
        fail(ErrorCode::Argument, "measurements require canonical RAS orientation");
}

std::int32_t require_label(const LabelMap& m, const std::string& name) {
    auto id = m.scheme()->id_of(name);
    if (!id)
        fail(ErrorCode::Argument, "vertebra " + name + " is not in the scheme");
    return *id;
}

// Per-column z extents of one label over the axial grid. min_z/max_z hold
// nx*ny entries; columns without the label keep min > max.
struct ColumnExtents {
    std::vector<std::int64_t> min_z;
    std::vector<std::int64_t> max_z;
    bool any = false;
    double z_centroid = 0.0;
};

ColumnExtents column_extents(const LabelMap& m, std::int32_t label) {
    const Dims& d = m.dims();
    const std::size_t ncols = static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]);
    ColumnExtents e;
    e.min_z.assign(ncols, std::numeric_limits<std::int64_t>::max());
    e.max_z.assign(ncols, std::numeric_limits<std::int64_t>::min());
    const auto labels = m.data();
    double zsum = 0.0;
    std::int64_t count = 0;
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++idx) {
                if (labels[idx] != label) continue;
                const std::size_t col = static_cast<std::size_t>(i) +
                                        static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(j);
                e.min_z[col] = std::min(e.min_z[col], k);
                e.max_z[col] = std::max(e.max_z[col], k);
                zsum += static_cast<double>(k);
                ++count;
            }
    e.any = count > 0;
    if (count > 0) e.z_centroid = zsum / static_cast<double>(count);
    return e;
}

// Lower-midpoint median, consistent with the fingerprint aggregation rule.
double median_lower(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

}  // namespace

std::vector<LevelPair> pair_levels(const LabelMap& m) {
    check_canonical(m);
    const auto& scheme = *m.scheme();
    const auto ordered = scheme.vertebrae_in_order();
    std::map<std::int32_t, bool> has;
    for (std::int32_t id : m.present_labels()) has[id] = true;

    std::vector<LevelPair> pairs;
    for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
        const std::int32_t upper = ordered[i];
        const std::int32_t lower = ordered[i + 1];
        if (scheme.anatomical_index(lower) != scheme.anatomical_index(upper) + 1)
            continue;  // scheme omits the in-between vertebra
        if (has.count(upper) && has.count(lower))
            pairs.push_back({*scheme.name_of(upper), *scheme.name_of(lower)});
    }
    return pairs;
}

namespace {

struct GapStats {
    std::vector<double> all_gaps;   // voxel layers, may be negative
    double mid_sum = 0.0;           // per-column midpoints between endplates
    std::int64_t columns = 0;
};

GapStats column_gaps(const LabelMap& m, std::int32_t upper_label, std::int32_t lower_label) {
    const ColumnExtents upper = column_extents(m, upper_label);
    const ColumnExtents lower = column_extents(m, lower_label);
    if (!upper.any || !lower.any)
        fail(ErrorCode::Argument, "both vertebrae of the pair must be present in the map");

    // superior label = larger z-centroid, regardless of argument order
    const ColumnExtents& sup = upper.z_centroid >= lower.z_centroid ? upper : lower;
    const ColumnExtents& inf = upper.z_centroid >= lower.z_centroid ? lower : upper;

    GapStats stats;
    for (std::size_t col = 0; col < sup.min_z.size(); ++col) {
        if (sup.min_z[col] > sup.max_z[col] || inf.min_z[col] > inf.max_z[col]) continue;
        const double gap = static_cast<double>(sup.min_z[col] - inf.max_z[col] - 1);
        stats.all_gaps.push_back(gap);
        stats.mid_sum += (static_cast<double>(sup.min_z[col]) + static_cast<double>(inf.max_z[col])) / 2.0;
        ++stats.columns;
    }
    return stats;
}

double disc_height_from_stats(GapStats& stats, double sz, int min_columns,
                              const std::string& level) {
    if (stats.columns < min_columns)
        fail(ErrorCode::InsufficientOverlap,
             level + ": only " + std::to_string(stats.columns) + " overlapping columns (need " +
                 std::to_string(min_columns) + ")");
    if (median_lower(stats.all_gaps) < 0.0)
        fail(ErrorCode::InconsistentLabels,
             level + ": vertebra labels interpenetrate (median gap below zero)");
    std::vector<double> qualifying;
    qualifying.reserve(stats.all_gaps.size());
    for (double g : stats.all_gaps)
        if (g >= 0.0) qualifying.push_back(g);
    if (static_cast<int>(qualifying.size()) < min_columns)
        fail(ErrorCode::InsufficientOverlap,
             level + ": only " + std::to_string(qualifying.size()) + " qualifying columns (need " +
                 std::to_string(min_columns) + ")");
    return median_lower(qualifying) * sz;
}

}  // namespace

double disc_height(const LabelMap& m, const LevelPair& pair, const MeasureOptions& opts) {
    check_canonical(m);
    GapStats stats = column_gaps(m, require_label(m, pair.upper), require_label(m, pair.lower));
    return disc_height_from_stats(stats, m.spacing()[2], opts.min_columns, pair.name());
}

double canal_ap_diameter(const LabelMap& m, std::int64_t slice_z, const MeasureOptions& opts) {
    check_canonical(m);
    if (slice_z < 0 || slice_z >= m.dims()[2])
        fail(ErrorCode::NoCanalAtLevel, "slice " + std::to_string(slice_z) + " outside the grid");
    const LabelMap canal = postseg::largest_component(m, m.scheme()->canal_id(), opts.connectivity);
    const auto labels = canal.data();
    const Dims& d = m.dims();
    std::int64_t min_y = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_y = std::numeric_limits<std::int64_t>::min();
    std::size_t idx = static_cast<std::size_t>(slice_z) * static_cast<std::size_t>(d[0]) *
                      static_cast<std::size_t>(d[1]);
    for (std::int64_t j = 0; j < d[1]; ++j)
        for (std::int64_t i = 0; i < d[0]; ++i, ++idx)
            if (labels[idx] != 0) {
                min_y = std::min(min_y, j);
                max_y = std::max(max_y, j);
            }
    if (min_y > max_y)
        fail(ErrorCode::NoCanalAtLevel,
             "no canal voxels in slice " + std::to_string(slice_z));
    return static_cast<double>(max_y - min_y + 1) * m.spacing()[1];
}

MeasurementReport measure_all(const LabelMap& m, const MeasureOptions& opts) {
    check_canonical(m);
    MeasurementReport report;
    report.spacing_mm = m.spacing();
    report.orientation = m.orientation().str();
    report.algorithm = kAlgorithm;

    for (const LevelPair& pair : pair_levels(m)) {
        LevelMeasurement lm;
        lm.level = pair.name();
        std::optional<std::int64_t> mid_slice;
        try {
            GapStats stats = column_gaps(m, require_label(m, pair.upper), require_label(m, pair.lower));
            if (stats.columns > 0) {
                const double mean_mid = stats.mid_sum / static_cast<double>(stats.columns);
                const auto z = static_cast<std::int64_t>(std::floor(mean_mid + 0.5));
                mid_slice = std::clamp<std::int64_t>(z, 0, m.dims()[2] - 1);
            }
            lm.disc_height_mm = disc_height_from_stats(stats, m.spacing()[2], opts.min_columns,
                                                       pair.name());
        } catch (const Error& e) {
            lm.disc_failure = error_code_name(e.code());
        }
        lm.mid_gap_slice = mid_slice;
        if (mid_slice) {
            try {
                lm.canal_ap_diameter_mm = canal_ap_diameter(m, *mid_slice, opts);
            } catch (const Error& e) {
                lm.canal_failure = error_code_name(e.code());
            }
        } else {
            lm.canal_failure = error_code_name(ErrorCode::InsufficientOverlap);
        }
        report.levels.push_back(std::move(lm));
    }
    return report;
}

json MeasurementReport::to_json() const {
    json disc = json::object();
    json canal = json::object();
    json failures = json::object();
    json slices = json::object();
    for (const LevelMeasurement& lm : levels) {
        if (lm.disc_height_mm)
            disc[lm.level] = round6(*lm.disc_height_mm);
        else if (!lm.disc_failure.empty())
            failures[lm.level + "/disc_height"] = lm.disc_failure;
        if (lm.canal_ap_diameter_mm)
            canal[lm.level] = round6(*lm.canal_ap_diameter_mm);
        else if (!lm.canal_failure.empty())
            failures[lm.level + "/canal_ap_diameter"] = lm.canal_failure;
        if (lm.mid_gap_slice) slices[lm.level] = *lm.mid_gap_slice;
    }
    return json{
        {"disc_heights_mm", disc},
        {"canal_ap_diameters_mm", canal},
        {"mid_gap_slices", slices},
        {"failures", failures},
        {"provenance",
         {{"spacing_mm", {round6(spacing_mm[0]), round6(spacing_mm[1]), round6(spacing_mm[2])}},
          {"orientation", orientation},
          {"algorithm", algorithm},
          {"units", "mm"},
          {"notes",
           {"disc height = median per-column vertical gap over the shared axial footprint",
            "canal AP diameter = full y-extent of the largest canal component at the mid-gap slice"}}}},
    };
}

MeasurementReport MeasurementReport::from_json(const json& j) {
    MeasurementReport report;
    const char* what = "measurement report";
    const json& prov = jsonutil::require(j, "provenance", what);
    auto sp = jsonutil::require(prov, "spacing_mm", what);
    for (int a = 0; a < 3; ++a) report.spacing_mm[a] = sp.at(a).get<double>();
    report.orientation = jsonutil::require_string(prov, "orientation", what);
    report.algorithm = jsonutil::require_string(prov, "algorithm", what);

    std::map<std::string, LevelMeasurement> by_level;
    auto level_of = [&](const std::string& name) -> LevelMeasurement& {
        auto [it, inserted] = by_level.try_emplace(name);
        if (inserted) it->second.level = name;
        return it->second;
    };
    for (auto& [k, v] : jsonutil::require(j, "disc_heights_mm", what).items())
        level_of(k).disc_height_mm = v.get<double>();
    for (auto& [k, v] : jsonutil::require(j, "canal_ap_diameters_mm", what).items())
        level_of(k).canal_ap_diameter_mm = v.get<double>();
    if (j.contains("mid_gap_slices"))
        for (auto& [k, v] : j["mid_gap_slices"].items())
            level_of(k).mid_gap_slice = v.get<std::int64_t>();
    if (j.contains("failures"))
        for (auto& [k, v] : j["failures"].items()) {
            const auto slash = k.find('/');
            if (slash == std::string::npos) continue;
            LevelMeasurement& lm = level_of(k.substr(0, slash));
            if (k.substr(slash + 1) == "disc_height")
                lm.disc_failure = v.get<std::string>();
            else
                lm.canal_failure = v.get<std::string>();
        }
    for (auto& [name, lm] : by_level) report.levels.push_back(lm);
    // restore superior->inferior order (maps iterate lexically, which breaks
    // past D9)
    const auto scheme = volgrid::LabelScheme::default_scheme();
    std::stable_sort(report.levels.begin(), report.levels.end(),
                     [&](const LevelMeasurement& a, const LevelMeasurement& b) {
                         auto key = [&](const LevelMeasurement& lm) {
                             const auto dash = lm.level.find('-');
                             auto id = scheme->id_of(lm.level.substr(0, dash));
                             return id ? scheme->anatomical_index(*id)
                                       : std::numeric_limits<int>::max();
                         };
                         return key(a) < key(b);
                     });
    return report;
}

std::string MeasurementReport::to_csv() const {
    std::string csv = "level,disc_height_mm,canal_ap_diameter_mm,status\n";
    char buf[64];
    for (const LevelMeasurement& lm : levels) {
        csv += lm.level;
        csv += ',';
        if (lm.disc_height_mm) {
            std::snprintf(buf, sizeof(buf), "%.6f", *lm.disc_height_mm);
            csv += buf;
        }
        csv += ',';
        if (lm.canal_ap_diameter_mm) {
            std::snprintf(buf, sizeof(buf), "%.6f", *lm.canal_ap_diameter_mm);
            csv += buf;
        }
        csv += ',';
        if (!lm.disc_failure.empty() || !lm.canal_failure.empty()) {
            csv += lm.disc_failure.empty() ? lm.canal_failure : lm.disc_failure;
        } else {
            csv += "ok";
        }
        csv += '\n';
    }
    return csv;
}

}  // namespace spm::morpho
