#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsonutil.hpp"
#include "morpho.hpp"
#include "volgrid.hpp"

// Synthetic spine phantoms with exact ground-truth geometry, plus a classical
// intensity-threshold segmenter. Vertebral bodies are stacked elliptic
// cylinders along +z separated by the requested gaps; the canal is an elliptic
// tube running the full stack posterior to the bodies. The image is the
// per-tissue mean plus seeded Gaussian noise.
//
// Noise is reproducible from the description alone: a std::mt19937_64 seeded
// with `seed` yields, per voxel in linear order (x fastest), two uniforms
// u = (next() >> 11) * 2^-53 and a Box-Muller draw
// z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
namespace spm::phantom {

using jsonutil::json;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Vec3;
using volgrid::Volume;

struct TissueMeans {
    double background = 0.0;
    double gap = 60.0;    // disc-space tissue between bodies
    double canal = 120.0;
    double body = 180.0;
};

struct PhantomSpec {
    std::string region = "lumbar";   // lumbar: L1..L5+S1, cervical: C2..C7, dorsal: D1..D12
    int n_vertebrae = 5;
    std::array<double, 2> body_half_axes_mm{16.0, 12.0};  // x, y
    double body_height_mm = 28.0;
    std::vector<double> disc_gaps_mm;  // superior->inferior, n_vertebrae - 1 entries
    double canal_ap_half_axis_mm = 7.0;
    double canal_lr_half_axis_mm = 9.0;
    double canal_posterior_offset_mm = 24.0;  // body center to canal center
    TissueMeans intensity_means;
    double noise_sigma = 0.0;
    Vec3 spacing_mm{1.0, 1.0, 1.0};
    std::uint64_t seed = 0;
    std::optional<Dims> dims;  // auto-sized when absent

    // Vertebra names superior->inferior for the region/n_vertebrae choice.
    std::vector<std::string> vertebra_names() const;

    json to_json() const;
    static PhantomSpec from_json(const json& j);
};

struct GroundTruth {
    LabelMap labels;
    morpho::MeasurementReport measurements;  // the constructed gaps/diameters
    PhantomSpec spec;
};

struct GeneratedPhantom {
    Volume image;
    GroundTruth truth;
};

GeneratedPhantom generate(const PhantomSpec& spec);

struct BaselineConfig {
    TissueMeans class_means;                // classification is nearest-mean
    std::vector<std::string> vertebrae;     // expected, superior->inferior
    std::int64_t min_component_voxels = 50; // plan default
    int connectivity = 26;

    json to_json() const;
    static BaselineConfig from_json(const json& j);
    static BaselineConfig from_phantom_spec(const PhantomSpec& spec);
};

// Threshold into tissue classes, drop small components, name vertebra
// components superior->inferior, keep the largest canal component. Throws
// Labeling when the vertebra component count disagrees with the config.
LabelMap segment_baseline(const Volume& v, const BaselineConfig& cfg);

}  // namespace spm::phantom
