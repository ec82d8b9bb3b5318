#pragma once

#include <cstdint>
#include <vector>

#include "jsonutil.hpp"
#include "volgrid.hpp"

// Post-processing of predicted label maps: 3D connected-component analysis per
// class and removal of components below a size threshold.
namespace spm::postseg {

using jsonutil::json;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Vec3;

struct Component {
    std::int32_t id;          // 1-based, assigned in scan order of first voxel
    std::int32_t label;       // class the component belongs to
    std::int64_t voxel_count;
    Dims bbox_min;
    Dims bbox_max;            // inclusive
    Vec3 centroid;            // mean voxel coordinate
};

struct ComponentAnalysis {
    std::vector<Component> components;
    std::vector<std::int32_t> component_ids;  // per voxel; 0 = background

    const Component* find(std::int32_t id) const;
};

// Components are computed per class label independently (same-class adjacency
// only) under 6- or 26-connectivity. Ids follow the scan order (x fastest) of
// each component's first voxel, so the numbering is deterministic.
ComponentAnalysis cc_label(const LabelMap& m, int connectivity = 26);

// Clears every component smaller than min_voxels to background; all other
// voxels pass through unchanged. Idempotent.
LabelMap filter_small(const LabelMap& m, std::int64_t min_voxels = 50, int connectivity = 26);

// Mask (as a LabelMap holding only `label`) of the largest component of that
// class; ties break toward the smaller component id. Empty mask when the
// class is absent.
LabelMap largest_component(const LabelMap& m, std::int32_t label, int connectivity = 26);

json component_table_json(const ComponentAnalysis& analysis);

}  // namespace spm::postseg
