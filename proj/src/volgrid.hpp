#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

// Core volumetric data model: grids with physical geometry, anatomical
// orientation, and index<->world transforms. Everything here is immutable
// after construction and safe to share across threads.
namespace spm::volgrid {

using Dims = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

// One letter per index axis, naming the anatomical direction of increasing
// index: R/L (right/left), A/P (anterior/posterior), S/I (superior/inferior).
// Canonical is "RAS": +x right, +y anterior, +z superior.
enum class AxisCode : std::uint8_t { R, L, A, P, S, I };

class Orientation {
public:
    Orientation() : codes_{AxisCode::R, AxisCode::A, AxisCode::S} {}
    explicit Orientation(std::array<AxisCode, 3> codes);

    static Orientation canonical() { return Orientation(); }
    // Parses a triple like "RAS", "LPS", "SAR". Throws Format on anything that
    // is not a signed permutation of the three anatomical axes.
    static Orientation parse(std::string_view axcodes);

    std::string str() const;
    bool is_canonical() const;

    // World axis (0=x/RL, 1=y/AP, 2=z/SI) served by the given index axis.
    int world_axis(int index_axis) const;
    // +1 if increasing index runs toward R/A/S, else -1.
    int sign(int index_axis) const;

    bool operator==(const Orientation& o) const { return codes_ == o.codes_; }

private:
    std::array<AxisCode, 3> codes_;
};

// Maps label ids to spinal structures. Ids are unique, 0 is reserved for
// background. Vertebrae carry a strict superior->inferior ordering; the canal
// sits outside that ordering.
class LabelScheme {
public:
    struct Entry {
        std::int32_t id;
        std::string name;
    };

    // C1..C7, D1..D12, L1..L5, S1 (ids 1..25) plus CANAL (id 26).
    static std::shared_ptr<const LabelScheme> default_scheme();

    explicit LabelScheme(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }
    std::optional<std::int32_t> id_of(std::string_view name) const;
    std::optional<std::string> name_of(std::int32_t id) const;
    bool contains(std::int32_t id) const;

    bool is_vertebra(std::int32_t id) const;
    // Position in the superior->inferior vertebra ordering; -1 for non-vertebrae.
    int anatomical_index(std::int32_t id) const;
    // Vertebra ids sorted superior->inferior.
    std::vector<std::int32_t> vertebrae_in_order() const;
    std::int32_t canal_id() const { return canal_id_; }

private:
    std::vector<Entry> entries_;
    std::int32_t canal_id_ = -1;
};

struct GridGeometry {
    Dims dims;
    Vec3 spacing;     // mm per voxel along each index axis
    Vec3 origin;      // world mm of voxel (0,0,0)
    Orientation orientation;
};

// Checks dims >= 1, spacing > 0 and finite, origin finite. Throws Argument.
void validate_geometry(const GridGeometry& g);

class Volume {
public:
    // Data is linear with x fastest, z slowest: index = i + nx*(j + ny*k).
    // All intensities must be finite.
    Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<double> data,
           Orientation orientation = Orientation::canonical());

    const Dims& dims() const { return g_.dims; }
    const Vec3& spacing() const { return g_.spacing; }
    const Vec3& origin() const { return g_.origin; }
    const Orientation& orientation() const { return g_.orientation; }
    const GridGeometry& geometry() const { return g_; }

    std::span<const double> data() const { return data_; }
    std::size_t voxel_count() const { return data_.size(); }

    std::size_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(g_.dims[0]) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(g_.dims[1]) * static_cast<std::size_t>(k));
    }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data_[linear_index(i, j, k)];
    }

private:
    GridGeometry g_;
    std::vector<double> data_;
};

class LabelMap {
public:
    // Labels must be non-negative and, apart from 0, present in the scheme.
    LabelMap(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::int32_t> labels,
             std::shared_ptr<const LabelScheme> scheme = LabelScheme::default_scheme(),
             Orientation orientation = Orientation::canonical());

    const Dims& dims() const { return g_.dims; }
    const Vec3& spacing() const { return g_.spacing; }
    const Vec3& origin() const { return g_.origin; }
    const Orientation& orientation() const { return g_.orientation; }
    const GridGeometry& geometry() const { return g_; }
    const std::shared_ptr<const LabelScheme>& scheme() const { return scheme_; }

    std::span<const std::int32_t> data() const { return labels_; }
    std::size_t voxel_count() const { return labels_.size(); }

    std::size_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(g_.dims[0]) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(g_.dims[1]) * static_cast<std::size_t>(k));
    }
    std::int32_t at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return labels_[linear_index(i, j, k)];
    }

    // Distinct labels present in the data, ascending, background excluded.
    std::vector<std::int32_t> present_labels() const;

private:
    GridGeometry g_;
    std::vector<std::int32_t> labels_;
    std::shared_ptr<const LabelScheme> scheme_;
};

// index -> world mm under the grid's (possibly non-canonical) orientation.
// Throws Bounds when the index lies outside the grid.
Vec3 voxel_to_world(const GridGeometry& g, Dims index);
inline Vec3 voxel_to_world(const Volume& v, Dims index) { return voxel_to_world(v.geometry(), index); }
inline Vec3 voxel_to_world(const LabelMap& m, Dims index) { return voxel_to_world(m.geometry(), index); }

// Exact inverse on grid points; fractional and out-of-grid results allowed.
Vec3 world_to_voxel(const GridGeometry& g, Vec3 point);
inline Vec3 world_to_voxel(const Volume& v, Vec3 point) { return world_to_voxel(v.geometry(), point); }
inline Vec3 world_to_voxel(const LabelMap& m, Vec3 point) { return world_to_voxel(m.geometry(), point); }

// Relabels the grid as being in `source` orientation and permutes/flips the
// data into canonical RAS. Geometry (dims, spacing, origin) follows. A volume
// already canonical comes back bitwise identical.
Volume reorient_to_canonical(const Volume& v, const Orientation& source);
LabelMap reorient_to_canonical(const LabelMap& m, const Orientation& source);
inline Volume reorient_to_canonical(const Volume& v) { return reorient_to_canonical(v, v.orientation()); }
inline LabelMap reorient_to_canonical(const LabelMap& m) { return reorient_to_canonical(m, m.orientation()); }

}  // namespace spm::volgrid
