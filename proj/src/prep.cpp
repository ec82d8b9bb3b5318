#include "prep.hpp"

#include <algorithm>
#include <cmath>

namespace spm::prep {

using volgrid::Dims;

namespace {

void check_target_spacing(const Vec3& target) {
    for (double s : target)
        if (!(s > 0.0) || !std::isfinite(s))
            fail(ErrorCode::Argument, "target spacing must be positive and finite");
}

Dims output_dims(const Dims& in_dims, const Vec3& in_spacing, const Vec3& target) {
    Dims out{};
    for (int a = 0; a < 3; ++a) {
        const double exact = static_cast<double>(in_dims[a]) * in_spacing[a] / target[a];
        out[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(exact + 0.5)));
    }
    return out;
}

// Continuous input coordinate of an output voxel center; origin preserved so
// the mapping is a pure spacing ratio.
inline double source_coord(std::int64_t out_idx, double out_spacing, double in_spacing) {
    return static_cast<double>(out_idx) * out_spacing / in_spacing;
}

inline std::int64_t nearest_index(double u, std::int64_t n) {
    auto idx = static_cast<std::int64_t>(std::floor(u + 0.5));
    return std::clamp<std::int64_t>(idx, 0, n - 1);
}

}  // namespace

Volume resample(const Volume& v, Vec3 target, ResampleMode mode) {
    check_target_spacing(target);
    const Dims& nd = v.dims();
    const Dims od = output_dims(nd, v.spacing(), target);
    std::vector<double> out(static_cast<std::size_t>(od[0]) * od[1] * od[2]);

    const auto src = v.data();
    std::size_t dst = 0;
    for (std::int64_t k = 0; k < od[2]; ++k) {
        const double w = source_coord(k, target[2], v.spacing()[2]);
        for (std::int64_t j = 0; j < od[1]; ++j) {
            const double vy = source_coord(j, target[1], v.spacing()[1]);
            for (std::int64_t i = 0; i < od[0]; ++i, ++dst) {
                const double u = source_coord(i, target[0], v.spacing()[0]);
                if (mode == ResampleMode::Nearest) {
                    const auto si = nearest_index(u, nd[0]);
                    const auto sj = nearest_index(vy, nd[1]);
                    const auto sk = nearest_index(w, nd[2]);
                    out[dst] = src[v.linear_index(si, sj, sk)];
                    continue;
                }
                // trilinear with clamp-to-edge
                double cu = std::clamp(u, 0.0, static_cast<double>(nd[0] - 1));
                double cv = std::clamp(vy, 0.0, static_cast<double>(nd[1] - 1));
                double cw = std::clamp(w, 0.0, static_cast<double>(nd[2] - 1));
                const auto i0 = std::min<std::int64_t>(static_cast<std::int64_t>(cu), nd[0] > 1 ? nd[0] - 2 : 0);
                const auto j0 = std::min<std::int64_t>(static_cast<std::int64_t>(cv), nd[1] > 1 ? nd[1] - 2 : 0);
                const auto k0 = std::min<std::int64_t>(static_cast<std::int64_t>(cw), nd[2] > 1 ? nd[2] - 2 : 0);
                const double fx = cu - static_cast<double>(i0);
                const double fy = cv - static_cast<double>(j0);
                const double fz = cw - static_cast<double>(k0);
                const auto i1 = std::min<std::int64_t>(i0 + 1, nd[0] - 1);
                const auto j1 = std::min<std::int64_t>(j0 + 1, nd[1] - 1);
                const auto k1 = std::min<std::int64_t>(k0 + 1, nd[2] - 1);

                const double c000 = src[v.linear_index(i0, j0, k0)];
                const double c100 = src[v.linear_index(i1, j0, k0)];
                const double c010 = src[v.linear_index(i0, j1, k0)];
                const double c110 = src[v.linear_index(i1, j1, k0)];
                const double c001 = src[v.linear_index(i0, j0, k1)];
                const double c101 = src[v.linear_index(i1, j0, k1)];
                const double c011 = src[v.linear_index(i0, j1, k1)];
                const double c111 = src[v.linear_index(i1, j1, k1)];

                const double c00 = c000 + (c100 - c000) * fx;
                const double c10 = c010 + (c110 - c010) * fx;
                const double c01 = c001 + (c101 - c001) * fx;
                const double c11 = c011 + (c111 - c011) * fx;
                const double c0 = c00 + (c10 - c00) * fy;
                const double c1 = c01 + (c11 - c01) * fy;
                out[dst] = c0 + (c1 - c0) * fz;
            }
        }
    }
    return Volume(od, target, v.origin(), std::move(out), v.orientation());
}

LabelMap resample(const LabelMap& m, Vec3 target, ResampleMode mode) {
    if (mode != ResampleMode::Nearest)
        fail(ErrorCode::Argument, "label maps must be resampled with nearest-neighbor mode");
    check_target_spacing(target);
    const Dims& nd = m.dims();
    const Dims od = output_dims(nd, m.spacing(), target);
    std::vector<std::int32_t> out(static_cast<std::size_t>(od[0]) * od[1] * od[2]);
    const auto src = m.data();
    std::size_t dst = 0;
    for (std::int64_t k = 0; k < od[2]; ++k) {
        const auto sk = nearest_index(source_coord(k, target[2], m.spacing()[2]), nd[2]);
        for (std::int64_t j = 0; j < od[1]; ++j) {
            const auto sj = nearest_index(source_coord(j, target[1], m.spacing()[1]), nd[1]);
            for (std::int64_t i = 0; i < od[0]; ++i, ++dst) {
                const auto si = nearest_index(source_coord(i, target[0], m.spacing()[0]), nd[0]);
                out[dst] = src[m.linear_index(si, sj, sk)];
            }
        }
    }
    return LabelMap(od, target, m.origin(), std::move(out), m.scheme(), m.orientation());
}

Volume window(const Volume& v, const WindowSpec& w) {
    if (!(w.width > 0.0) || !std::isfinite(w.width) || !std::isfinite(w.center))
        fail(ErrorCode::Argument, "window width must be positive and finite, center finite");
    const double low = w.center - w.width / 2.0;
    std::vector<double> out(v.voxel_count());
    const auto src = v.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        out[i] = std::clamp((src[i] - low) / w.width, 0.0, 1.0);
    return Volume(v.dims(), v.spacing(), v.origin(), std::move(out), v.orientation());
}

ZscoreResult zscore(const Volume& v, const LabelMap* mask) {
    const auto src = v.data();
    std::vector<std::size_t> region;
    if (mask) {
        if (mask->dims() != v.dims())
            fail(ErrorCode::Argument, "mask grid does not match the volume");
        const auto labels = mask->data();
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] != 0) region.push_back(i);
        if (region.size() < 2)
            fail(ErrorCode::Argument, "mask selects fewer than 2 voxels");
    }

    // two-pass mean/std in a fixed order for determinism
    double sum = 0.0;
    const std::size_t n = mask ? region.size() : src.size();
    if (mask) {
        for (std::size_t i : region) sum += src[i];
    } else {
        for (double x : src) sum += x;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    if (mask) {
        for (std::size_t i : region) ss += (src[i] - mean) * (src[i] - mean);
    } else {
        for (double x : src) ss += (x - mean) * (x - mean);
    }
    const double stddev = std::sqrt(ss / static_cast<double>(n));

    std::vector<double> out(src.size());
    const bool degenerate = stddev < 1e-8;
    if (!degenerate)
        for (std::size_t i = 0; i < src.size(); ++i) out[i] = (src[i] - mean) / stddev;
    return ZscoreResult{Volume(v.dims(), v.spacing(), v.origin(), std::move(out), v.orientation()),
                        degenerate, mean, stddev};
}

}  // namespace spm::prep
