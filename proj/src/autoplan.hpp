#pragma once

#include <cstdint>
#include <vector>

#include "jsonutil.hpp"
#include "volgrid.hpp"

// Deterministic auto-configuration: a dataset fingerprint plus the fixed
// segmentation plan consumed by prep and postseg. The plan also records the
// training-side hyperparameters verbatim for provenance; no training runs here.
namespace spm::autoplan {

using jsonutil::json;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Vec3;
using volgrid::Volume;

struct VolumeSummary {
    Dims dims;
    Vec3 spacing;
};

struct DatasetFingerprint {
    std::vector<VolumeSummary> per_volume;
    Vec3 median_spacing;   // per-axis; lower-midpoint rule for even counts
    double fg_p0_5;        // foreground intensity percentiles (nearest-rank)
    double fg_p99_5;
    double fg_mean;
    double fg_std;
    std::size_t n_volumes;

    json to_json() const;
    static DatasetFingerprint from_json(const json& j);
    bool operator==(const DatasetFingerprint&) const = default;
};

// Foreground = mask voxels when masks are given (one per volume, matching
// grids), else all voxels. At least one volume required.
DatasetFingerprint fingerprint(const std::vector<const Volume*>& volumes,
                               const std::vector<const LabelMap*>& masks = {});

struct SegPlan {
    Vec3 target_spacing{1.25, 1.25, 1.25};
    Dims patch_size{128, 128, 64};
    int batch_size = 2;
    double loss_weight_dice = 0.7;
    double loss_weight_ce = 0.3;
    double initial_learning_rate = 0.01;
    double poly_decay_exponent = 0.9;  // recorded convention; training out of scope
    Dims kernel_size{3, 3, 3};
    int feature_maps_min = 32;
    int feature_maps_max = 320;
    std::int64_t min_component_voxels = 50;
    std::string normalization = "zscore";
    DatasetFingerprint fingerprint;

    json to_json() const;
    static SegPlan from_json(const json& j);
    bool operator==(const SegPlan&) const = default;
};

// Pure function of the fingerprint; identical fingerprints serialize to
// byte-identical plan documents.
SegPlan make_plan(const DatasetFingerprint& fp);

// Deterministic aggregation rules, shared with tests.
double median_lower_midpoint(std::vector<double> values);
double percentile_nearest_rank(std::vector<double> values, double pct);

}  // namespace spm::autoplan
