#include "volgrid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace spm::volgrid {

namespace {

int axcode_world_axis(AxisCode c) {
    switch (c) {
        case AxisCode::R:
        case AxisCode::L: return 0;
        case AxisCode::A:
        case AxisCode::P: return 1;
        case AxisCode::S:
        case AxisCode::I: return 2;
    }
    return -1;
}

int axcode_sign(AxisCode c) {
    switch (c) {
        case AxisCode::R:
        case AxisCode::A:
        case AxisCode::S: return 1;
        default: return -1;
    }
}

char axcode_char(AxisCode c) {
    switch (c) {
        case AxisCode::R: return 'R';
        case AxisCode::L: return 'L';
        case AxisCode::A: return 'A';
        case AxisCode::P: return 'P';
        case AxisCode::S: return 'S';
        case AxisCode::I: return 'I';
    }
    return '?';
}

}  // namespace

Orientation::Orientation(std::array<AxisCode, 3> codes) : codes_(codes) {
    bool seen[3] = {false, false, false};
    for (AxisCode c : codes_) {
        int w = axcode_world_axis(c);
        if (seen[w])
            fail(ErrorCode::Format,
                 "invalid axis-code triple '" + str() + "': axis used twice");
        seen[w] = true;
    }
}

Orientation Orientation::parse(std::string_view axcodes) {
    if (axcodes.size() != 3)
        fail(ErrorCode::Format, "invalid axis-code triple '" + std::string(axcodes) +
                                    "': expected exactly 3 letters");
    std::array<AxisCode, 3> codes{};
    for (int i = 0; i < 3; ++i) {
        switch (axcodes[i]) {
            case 'R': codes[i] = AxisCode::R; break;
            case 'L': codes[i] = AxisCode::L; break;
            case 'A': codes[i] = AxisCode::A; break;
            case 'P': codes[i] = AxisCode::P; break;
            case 'S': codes[i] = AxisCode::S; break;
            case 'I': codes[i] = AxisCode::I; break;
            default:
                fail(ErrorCode::Format, "invalid axis-code triple '" + std::string(axcodes) +
                                            "': unknown letter '" + axcodes[i] + "'");
        }
    }
    return Orientation(codes);
}

std::string Orientation::str() const {
    return std::string{axcode_char(codes_[0]), axcode_char(codes_[1]), axcode_char(codes_[2])};
}

bool Orientation::is_canonical() const {
    return codes_[0] == AxisCode::R && codes_[1] == AxisCode::A && codes_[2] == AxisCode::S;
}

int Orientation::world_axis(int index_axis) const { return axcode_world_axis(codes_[index_axis]); }
int Orientation::sign(int index_axis) const { return axcode_sign(codes_[index_axis]); }

LabelScheme::LabelScheme(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::set<std::int32_t> ids;
    std::set<std::string> names;
    for (const Entry& e : entries_) {
        if (e.id <= 0)
            fail(ErrorCode::Argument, "label scheme ids must be positive (0 is background)");
        if (!ids.insert(e.id).second)
            fail(ErrorCode::Argument, "duplicate label id " + std::to_string(e.id));
        if (!names.insert(e.name).second)
            fail(ErrorCode::Argument, "duplicate structure name " + e.name);
        if (e.name == "CANAL") canal_id_ = e.id;
    }
}

namespace {

// Superior->inferior vertebra names. Adjacency in this list is anatomical
// adjacency, including the C7-D1, D12-L1 and L5-S1 junctions.
const std::vector<std::string>& vertebra_name_order() {
    static const std::vector<std::string> order = [] {
        std::vector<std::string> v;
        for (int i = 1; i <= 7; ++i) v.push_back("C" + std::to_string(i));
        for (int i = 1; i <= 12; ++i) v.push_back("D" + std::to_string(i));
        for (int i = 1; i <= 5; ++i) v.push_back("L" + std::to_string(i));
        v.push_back("S1");
        return v;
    }();
    return order;
}

}  // namespace

std::shared_ptr<const LabelScheme> LabelScheme::default_scheme() {
    static const std::shared_ptr<const LabelScheme> scheme = [] {
        std::vector<Entry> entries;
        std::int32_t id = 1;
        for (const std::string& name : vertebra_name_order())
            entries.push_back({id++, name});
        entries.push_back({id, "CANAL"});
        return std::make_shared<const LabelScheme>(std::move(entries));
    }();
    return scheme;
}

std::optional<std::int32_t> LabelScheme::id_of(std::string_view name) const {
    for (const Entry& e : entries_)
        if (e.name == name) return e.id;
    return std::nullopt;
}

std::optional<std::string> LabelScheme::name_of(std::int32_t id) const {
    for (const Entry& e : entries_)
        if (e.id == id) return e.name;
    return std::nullopt;
}

bool LabelScheme::contains(std::int32_t id) const {
    return id == 0 || name_of(id).has_value();
}

bool LabelScheme::is_vertebra(std::int32_t id) const { return anatomical_index(id) >= 0; }

int LabelScheme::anatomical_index(std::int32_t id) const {
    auto name = name_of(id);
    if (!name) return -1;
    const auto& order = vertebra_name_order();
    auto it = std::find(order.begin(), order.end(), *name);
    if (it == order.end()) return -1;
    return static_cast<int>(it - order.begin());
}

std::vector<std::int32_t> LabelScheme::vertebrae_in_order() const {
    std::vector<std::pair<int, std::int32_t>> keyed;
    for (const Entry& e : entries_) {
        int idx = anatomical_index(e.id);
        if (idx >= 0) keyed.emplace_back(idx, e.id);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::int32_t> out;
    out.reserve(keyed.size());
    for (auto& [idx, id] : keyed) out.push_back(id);
    return out;
}

void validate_geometry(const GridGeometry& g) {
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] < 1)
            fail(ErrorCode::Argument, "grid dims must be >= 1");
        if (!(g.spacing[a] > 0.0) || !std::isfinite(g.spacing[a]))
            fail(ErrorCode::Argument, "grid spacing must be positive and finite");
        if (!std::isfinite(g.origin[a]))
            fail(ErrorCode::Argument, "grid origin must be finite");
    }
}

Volume::Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<double> data,
               Orientation orientation)
    : g_{dims, spacing, origin, orientation}, data_(std::move(data)) {
    validate_geometry(g_);
    const auto expected = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                          static_cast<std::size_t>(dims[2]);
    if (data_.size() != expected)
        fail(ErrorCode::Argument, "data length " + std::to_string(data_.size()) +
                                      " does not match dims product " + std::to_string(expected));
    for (double v : data_)
        if (!std::isfinite(v))
            fail(ErrorCode::Argument, "volume intensities must be finite");
}

LabelMap::LabelMap(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::int32_t> labels,
                   std::shared_ptr<const LabelScheme> scheme, Orientation orientation)
    : g_{dims, spacing, origin, orientation}, labels_(std::move(labels)), scheme_(std::move(scheme)) {
    validate_geometry(g_);
    if (!scheme_)
        fail(ErrorCode::Argument, "label map requires a scheme");
    const auto expected = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                          static_cast<std::size_t>(dims[2]);
    if (labels_.size() != expected)
        fail(ErrorCode::Argument, "label data length does not match dims product");
    std::set<std::int32_t> seen;
    for (std::int32_t v : labels_) {
        if (v < 0)
            fail(ErrorCode::Argument, "labels must be non-negative");
        if (v != 0 && seen.insert(v).second && !scheme_->contains(v))
            fail(ErrorCode::Argument, "label " + std::to_string(v) + " is not in the scheme");
    }
}

std::vector<std::int32_t> LabelMap::present_labels() const {
    std::set<std::int32_t> s(labels_.begin(), labels_.end());
    s.erase(0);
    return std::vector<std::int32_t>(s.begin(), s.end());
}

Vec3 voxel_to_world(const GridGeometry& g, Dims index) {
    for (int a = 0; a < 3; ++a)
        if (index[a] < 0 || index[a] >= g.dims[a])
            fail(ErrorCode::Bounds, "voxel index (" + std::to_string(index[0]) + "," +
                                        std::to_string(index[1]) + "," + std::to_string(index[2]) +
                                        ") outside grid");
    Vec3 world{};
    for (int a = 0; a < 3; ++a) {
        int w = g.orientation.world_axis(a);
        world[w] = g.origin[w] +
                   g.orientation.sign(a) * static_cast<double>(index[a]) * g.spacing[a];
    }
    return world;
}

Vec3 world_to_voxel(const GridGeometry& g, Vec3 point) {
    Vec3 voxel{};
    for (int a = 0; a < 3; ++a) {
        int w = g.orientation.world_axis(a);
        voxel[a] = g.orientation.sign(a) * (point[w] - g.origin[w]) / g.spacing[a];
    }
    return voxel;
}

namespace {

struct ReorientPlan {
    // For each canonical world axis w: source index axis, source sign,
    // canonical dims/spacing/origin.
    std::array<int, 3> src_axis;
    std::array<int, 3> src_sign;
    Dims dims;
    Vec3 spacing;
    Vec3 origin;
};

ReorientPlan plan_reorient(const GridGeometry& g, const Orientation& source) {
    ReorientPlan p{};
    for (int a = 0; a < 3; ++a) {
        int w = source.world_axis(a);
        p.src_axis[w] = a;
        p.src_sign[w] = source.sign(a);
        p.dims[w] = g.dims[a];
        p.spacing[w] = g.spacing[a];
        // origin moves to the low-coordinate end of a flipped axis
        p.origin[w] = g.origin[w];
        if (p.src_sign[w] < 0)
            p.origin[w] -= static_cast<double>(g.dims[a] - 1) * g.spacing[a];
    }
    return p;
}

template <typename T>
std::vector<T> permute_data(const GridGeometry& g, const ReorientPlan& p,
                            std::span<const T> src) {
    std::vector<T> out(src.size());
    const auto nx = g.dims[0], ny = g.dims[1];
    std::array<std::int64_t, 3> s{};  // source index per source axis
    std::size_t dst = 0;
    for (std::int64_t k = 0; k < p.dims[2]; ++k)
        for (std::int64_t j = 0; j < p.dims[1]; ++j)
            for (std::int64_t i = 0; i < p.dims[0]; ++i) {
                const std::array<std::int64_t, 3> c{i, j, k};
                for (int w = 0; w < 3; ++w) {
                    std::int64_t idx = c[w];
                    if (p.src_sign[w] < 0) idx = p.dims[w] - 1 - idx;
                    s[p.src_axis[w]] = idx;
                }
                out[dst++] = src[static_cast<std::size_t>(s[0]) +
                                 static_cast<std::size_t>(nx) *
                                     (static_cast<std::size_t>(s[1]) +
                                      static_cast<std::size_t>(ny) * static_cast<std::size_t>(s[2]))];
            }
    return out;
}

}  // namespace

Volume reorient_to_canonical(const Volume& v, const Orientation& source) {
    if (source.is_canonical())
        return Volume(v.dims(), v.spacing(), v.origin(),
                      std::vector<double>(v.data().begin(), v.data().end()));
    ReorientPlan p = plan_reorient(v.geometry(), source);
    return Volume(p.dims, p.spacing, p.origin, permute_data<double>(v.geometry(), p, v.data()));
}

LabelMap reorient_to_canonical(const LabelMap& m, const Orientation& source) {
    if (source.is_canonical())
        return LabelMap(m.dims(), m.spacing(), m.origin(),
                        std::vector<std::int32_t>(m.data().begin(), m.data().end()), m.scheme());
    ReorientPlan p = plan_reorient(m.geometry(), source);
    return LabelMap(p.dims, p.spacing, p.origin,
                    permute_data<std::int32_t>(m.geometry(), p, m.data()), m.scheme());
}

}  // namespace spm::volgrid
