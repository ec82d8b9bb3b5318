#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jsonutil.hpp"
#include "volgrid.hpp"

// Geometric measurement of a canonical-orientation label map: disc height
// between adjacent vertebrae and spinal canal AP diameter, in millimeters.
//
// Disc height is the median per-column vertical gap over the axial footprint
// shared by the two vertebrae. The AP diameter is the full anteroposterior
// extent of the largest canal component in one axial slice, taken at the
// mid-gap height of each level.
namespace spm::morpho {

using jsonutil::json;
using volgrid::LabelMap;

struct LevelPair {
    std::string upper;  // superior vertebra
    std::string lower;  // inferior vertebra, exactly one step below

    std::string name() const { return upper + "-" + lower; }
};

struct MeasureOptions {
    int min_columns = 10;   // overlap columns required for a disc measurement
    int connectivity = 26;  // canal component connectivity
};

// All scheme-adjacent vertebra pairs whose labels are both present, ordered
// superior->inferior. Pairs across a missing vertebra are not formed.
std::vector<LevelPair> pair_levels(const LabelMap& m);

// Median per-column gap between the facing endplates, in mm. Which argument
// is superior is resolved from the z-centroids, so the pair's order never
// changes the value. Throws InsufficientOverlap / InconsistentLabels.
double disc_height(const LabelMap& m, const LevelPair& pair, const MeasureOptions& opts = {});

// (max_y - min_y + 1) * sy over the largest canal component's voxels in the
// given axial slice. Throws NoCanalAtLevel when the slice has no canal.
double canal_ap_diameter(const LabelMap& m, std::int64_t slice_z, const MeasureOptions& opts = {});

struct LevelMeasurement {
    std::string level;  // pair name, e.g. "C2-C3"
    std::optional<double> disc_height_mm;
    std::optional<double> canal_ap_diameter_mm;
    std::optional<std::int64_t> mid_gap_slice;
    std::string disc_failure;   // error kind when the disc measurement failed
    std::string canal_failure;  // error kind when the canal measurement failed
};

struct MeasurementReport {
    std::vector<LevelMeasurement> levels;  // scheme order, superior->inferior
    volgrid::Vec3 spacing_mm{};
    std::string orientation;  // axis codes, "RAS"
    std::string algorithm;

    json to_json() const;
    static MeasurementReport from_json(const json& j);
    std::string to_csv() const;
};

// Measures every level from pair_levels; per-level failures are recorded in
// the report instead of thrown.
MeasurementReport measure_all(const LabelMap& m, const MeasureOptions& opts = {});

}  // namespace spm::morpho
