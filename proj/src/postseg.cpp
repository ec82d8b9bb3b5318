#include "postseg.hpp"

#include <algorithm>

namespace spm::postseg {

namespace {

void check_connectivity(int connectivity) {
    if (connectivity != 6 && connectivity != 26)
        fail(ErrorCode::Argument, "connectivity must be 6 or 26");
}

struct Offsets {
    std::array<std::array<int, 3>, 26> d;
    int count;
};

Offsets neighbor_offsets(int connectivity) {
    Offsets o{};
    if (connectivity == 6) {
        o.count = 6;
        o.d = {{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
        return o;
    }
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                o.d[n++] = {dx, dy, dz};
            }
    o.count = n;
    return o;
}

}  // namespace

const Component* ComponentAnalysis::find(std::int32_t id) const {
    for (const Component& c : components)
        if (c.id == id) return &c;
    return nullptr;
}

ComponentAnalysis cc_label(const LabelMap& m, int connectivity) {
    check_connectivity(connectivity);
    const Offsets offsets = neighbor_offsets(connectivity);
    const Dims& d = m.dims();
    const auto labels = m.data();

    ComponentAnalysis out;
    out.component_ids.assign(labels.size(), 0);

    std::vector<std::size_t> stack;
    std::int32_t next_id = 1;
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++idx) {
                const std::int32_t cls = labels[idx];
                if (cls == 0 || out.component_ids[idx] != 0) continue;

                Component comp{};
                comp.id = next_id++;
                comp.label = cls;
                comp.bbox_min = {i, j, k};
                comp.bbox_max = {i, j, k};
                double cx = 0, cy = 0, cz = 0;

                out.component_ids[idx] = comp.id;
                stack.clear();
                stack.push_back(idx);
                while (!stack.empty()) {
                    const std::size_t cur = stack.back();
                    stack.pop_back();
                    const auto ci = static_cast<std::int64_t>(cur % static_cast<std::size_t>(d[0]));
                    const auto cj = static_cast<std::int64_t>((cur / static_cast<std::size_t>(d[0])) %
                                                              static_cast<std::size_t>(d[1]));
                    const auto ck = static_cast<std::int64_t>(cur / (static_cast<std::size_t>(d[0]) *
                                                                     static_cast<std::size_t>(d[1])));
                    ++comp.voxel_count;
                    cx += static_cast<double>(ci);
                    cy += static_cast<double>(cj);
                    cz += static_cast<double>(ck);
                    for (int a = 0; a < 3; ++a) {
                        const std::int64_t c[3] = {ci, cj, ck};
                        comp.bbox_min[a] = std::min(comp.bbox_min[a], c[a]);
                        comp.bbox_max[a] = std::max(comp.bbox_max[a], c[a]);
                    }
                    for (int n = 0; n < offsets.count; ++n) {
                        const std::int64_t ni = ci + offsets.d[n][0];
                        const std::int64_t nj = cj + offsets.d[n][1];
                        const std::int64_t nk = ck + offsets.d[n][2];
                        if (ni < 0 || ni >= d[0] || nj < 0 || nj >= d[1] || nk < 0 || nk >= d[2])
                            continue;
                        const std::size_t nidx = m.linear_index(ni, nj, nk);
                        if (labels[nidx] == cls && out.component_ids[nidx] == 0) {
                            out.component_ids[nidx] = comp.id;
                            stack.push_back(nidx);
                        }
                    }
                }
                comp.centroid = {cx / static_cast<double>(comp.voxel_count),
                                 cy / static_cast<double>(comp.voxel_count),
                                 cz / static_cast<double>(comp.voxel_count)};
                out.components.push_back(comp);
            }
    return out;
}

LabelMap filter_small(const LabelMap& m, std::int64_t min_voxels, int connectivity) {
    if (min_voxels < 1)
        fail(ErrorCode::Argument, "min_voxels must be >= 1");
    const ComponentAnalysis analysis = cc_label(m, connectivity);
    std::vector<bool> keep(analysis.components.size() + 1, false);
    for (const Component& c : analysis.components)
        keep[static_cast<std::size_t>(c.id)] = c.voxel_count >= min_voxels;

    std::vector<std::int32_t> out(m.data().begin(), m.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::int32_t id = analysis.component_ids[i];
        if (id != 0 && !keep[static_cast<std::size_t>(id)]) out[i] = 0;
    }
    return LabelMap(m.dims(), m.spacing(), m.origin(), std::move(out), m.scheme(), m.orientation());
}

LabelMap largest_component(const LabelMap& m, std::int32_t label, int connectivity) {
    if (!m.scheme()->contains(label) || label == 0)
        fail(ErrorCode::Argument, "label " + std::to_string(label) + " is not in the scheme");
    const ComponentAnalysis analysis = cc_label(m, connectivity);
    const Component* best = nullptr;
    for (const Component& c : analysis.components) {
        if (c.label != label) continue;
        if (!best || c.voxel_count > best->voxel_count) best = &c;
        // equal sizes keep the earlier id
    }
    std::vector<std::int32_t> out(m.voxel_count(), 0);
    if (best) {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (analysis.component_ids[i] == best->id) out[i] = label;
    }
    return LabelMap(m.dims(), m.spacing(), m.origin(), std::move(out), m.scheme(), m.orientation());
}

json component_table_json(const ComponentAnalysis& analysis) {
    json rows = json::array();
    for (const Component& c : analysis.components) {
        rows.push_back({{"id", c.id},
                        {"label", c.label},
                        {"voxel_count", c.voxel_count},
                        {"bbox_min", c.bbox_min},
                        {"bbox_max", c.bbox_max},
                        {"centroid",
                         {jsonutil::round6(c.centroid[0]), jsonutil::round6(c.centroid[1]),
                          jsonutil::round6(c.centroid[2])}}});
    }
    return json{{"components", rows}};
}

}  // namespace spm::postseg
