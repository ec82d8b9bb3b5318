#pragma once

#include "volgrid.hpp"

// Preprocessing: resampling to a target spacing, Z-score intensity
// normalization, and WW/WC windowing.
namespace spm::prep {

using volgrid::LabelMap;
using volgrid::Vec3;
using volgrid::Volume;

enum class ResampleMode {
    Trilinear,  // images
    Nearest,    // label maps
};

// Output dim per axis = max(1, round-half-up(in_dim * in_spacing / target)).
// Trilinear samples are edge-clamped; the origin is preserved.
Volume resample(const Volume& v, Vec3 target_spacing, ResampleMode mode = ResampleMode::Trilinear);

// Label maps resample nearest-neighbor only; Trilinear is rejected.
LabelMap resample(const LabelMap& m, Vec3 target_spacing, ResampleMode mode = ResampleMode::Nearest);

struct WindowSpec {
    double width;   // WW > 0
    double center;  // WC
};

// out = clamp((x - (WC - WW/2)) / WW, 0, 1)
Volume window(const Volume& v, const WindowSpec& w);

struct ZscoreResult {
    Volume volume;
    bool degenerate_std;  // std below 1e-8: output is all zeros
    double mean;
    double stddev;  // population std over the masked region
};

// Normalizes the whole volume by the mean/std of the masked region (the whole
// volume when mask is null). The mask's nonzero labels select the region and
// must cover at least 2 voxels.
ZscoreResult zscore(const Volume& v, const LabelMap* mask = nullptr);

}  // namespace spm::prep
