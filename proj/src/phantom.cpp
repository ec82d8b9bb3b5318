#include "phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "postseg.hpp"

namespace spm::phantom {

using jsonutil::round6;
using volgrid::LabelScheme;
using volgrid::Orientation;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> region_names(const std::string& region) {
    std::vector<std::string> names;
    if (region == "lumbar") {
        for (int i = 1; i <= 5; ++i) names.push_back("L" + std::to_string(i));
        names.push_back("S1");
    } else if (region == "cervical") {
        for (int i = 2; i <= 7; ++i) names.push_back("C" + std::to_string(i));
    } else if (region == "dorsal") {
        for (int i = 1; i <= 12; ++i) names.push_back("D" + std::to_string(i));
    } else {
        fail(ErrorCode::Argument, "unknown phantom region '" + region +
                                      "' (expected lumbar, cervical or dorsal)");
    }
    return names;
}

void validate(const PhantomSpec& s) {
    if (s.n_vertebrae < 1)
        fail(ErrorCode::Argument, "phantom needs at least one vertebra");
    const auto names = region_names(s.region);
    if (static_cast<std::size_t>(s.n_vertebrae) > names.size())
        fail(ErrorCode::Argument, "region " + s.region + " supports at most " +
                                      std::to_string(names.size()) + " vertebrae");
    if (s.disc_gaps_mm.size() != static_cast<std::size_t>(s.n_vertebrae - 1))
        fail(ErrorCode::Argument, "disc_gaps_mm must have n_vertebrae - 1 entries");
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(s.body_half_axes_mm[0]) || !positive(s.body_half_axes_mm[1]) ||
        !positive(s.body_height_mm) || !positive(s.canal_ap_half_axis_mm) ||
        !positive(s.canal_lr_half_axis_mm) || !positive(s.canal_posterior_offset_mm))
        fail(ErrorCode::Argument, "phantom geometric fields must be positive");
    for (double g : s.disc_gaps_mm)
        if (!positive(g))
            fail(ErrorCode::Argument, "disc gaps must be positive");
    for (double sp : s.spacing_mm)
        if (!positive(sp))
            fail(ErrorCode::Argument, "spacing must be positive");
    if (s.canal_posterior_offset_mm <= s.body_half_axes_mm[1] + s.canal_ap_half_axis_mm)
        fail(ErrorCode::Argument, "canal overlaps the vertebral bodies; increase the offset");
    if (s.noise_sigma < 0.0 || !std::isfinite(s.noise_sigma))
        fail(ErrorCode::Argument, "noise sigma must be non-negative");
    if (s.noise_sigma > 0.0) {
        const double m[4] = {s.intensity_means.background, s.intensity_means.gap,
                             s.intensity_means.canal, s.intensity_means.body};
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if (std::abs(m[a] - m[b]) < 4.0 * s.noise_sigma)
                    fail(ErrorCode::Argument,
                         "tissue intensity means must be separated by at least 4 sigma");
    }
}

struct Layout {
    Dims dims;
    double cx;        // shared x center (on a voxel center)
    double body_cy;
    double canal_cy;
    // per body: z interval [z0, z1) in mm, voxel centers inside belong to it
    std::vector<std::array<double, 2>> body_z;
    double stack_z0;
    double stack_z1;
};

Layout plan_layout(const PhantomSpec& s) {
    Layout lay{};
    const Vec3& sp = s.spacing_mm;
    const double half_x = std::max(s.body_half_axes_mm[0], s.canal_lr_half_axis_mm);

    double total_z = s.body_height_mm * s.n_vertebrae;
    for (double g : s.disc_gaps_mm) total_z += g;

    if (s.dims) {
        lay.dims = *s.dims;
    } else {
        const auto nhalf = static_cast<std::int64_t>(std::ceil((half_x + 2.0 * sp[0]) / sp[0]));
        lay.dims[0] = 2 * nhalf + 1;
        const double y_top = 2.0 * sp[1] + s.canal_ap_half_axis_mm + s.canal_posterior_offset_mm +
                             s.body_half_axes_mm[1];
        lay.dims[1] = static_cast<std::int64_t>(std::ceil((y_top + 2.0 * sp[1]) / sp[1])) + 1;
        const double z_top = 2.0 * sp[2] + total_z;
        lay.dims[2] = static_cast<std::int64_t>(std::ceil((z_top + 2.0 * sp[2]) / sp[2])) + 1;
    }
    volgrid::validate_geometry({lay.dims, sp, {0, 0, 0}, Orientation::canonical()});

    lay.cx = sp[0] * static_cast<double>((lay.dims[0] - 1) / 2);
    lay.canal_cy = 2.0 * sp[1] + s.canal_ap_half_axis_mm;
    lay.body_cy = lay.canal_cy + s.canal_posterior_offset_mm;

    lay.stack_z0 = 2.0 * sp[2];
    double z = lay.stack_z0;
    // built bottom-up: the most inferior vertebra sits at the bottom
    std::vector<std::array<double, 2>> bottom_up;
    for (int b = s.n_vertebrae - 1; b >= 0; --b) {
        bottom_up.push_back({z, z + s.body_height_mm});
        z += s.body_height_mm;
        if (b > 0) z += s.disc_gaps_mm[static_cast<std::size_t>(b - 1)];
    }
    lay.stack_z1 = z;
    // store superior->inferior to match the name list
    lay.body_z.assign(bottom_up.rbegin(), bottom_up.rend());

    const double max_x = lay.cx + half_x;
    const double max_y = lay.body_cy + s.body_half_axes_mm[1];
    const double grid_x = static_cast<double>(lay.dims[0] - 1) * sp[0];
    const double grid_y = static_cast<double>(lay.dims[1] - 1) * sp[1];
    const double grid_z = static_cast<double>(lay.dims[2] - 1) * sp[2];
    if (lay.cx - half_x < 0.0 || max_x > grid_x || max_y > grid_y ||
        lay.canal_cy - s.canal_ap_half_axis_mm < 0.0 || lay.stack_z1 > grid_z)
        fail(ErrorCode::Argument, "phantom stack exceeds the grid");
    return lay;
}

inline bool in_ellipse(double x, double cx, double hx, double y, double cy, double hy) {
    const double u = (x - cx) / hx;
    const double v = (y - cy) / hy;
    return u * u + v * v <= 1.0;
}

}  // namespace

std::vector<std::string> PhantomSpec::vertebra_names() const {
    const auto names = region_names(region);
    return {names.begin(), names.begin() + n_vertebrae};
}

GeneratedPhantom generate(const PhantomSpec& spec) {
    validate(spec);
    const Layout lay = plan_layout(spec);
    const Vec3& sp = spec.spacing_mm;
    const auto scheme = LabelScheme::default_scheme();
    const auto names = spec.vertebra_names();

    std::vector<std::int32_t> vertebra_ids;
    for (const std::string& n : names) vertebra_ids.push_back(*scheme->id_of(n));
    const std::int32_t canal_id = scheme->canal_id();

    const std::size_t nvox = static_cast<std::size_t>(lay.dims[0]) *
                             static_cast<std::size_t>(lay.dims[1]) *
                             static_cast<std::size_t>(lay.dims[2]);
    std::vector<std::int32_t> labels(nvox, 0);
    std::vector<double> image(nvox, spec.intensity_means.background);

    std::size_t idx = 0;
    for (std::int64_t k = 0; k < lay.dims[2]; ++k) {
        const double z = static_cast<double>(k) * sp[2];
        const bool in_stack_z = z >= lay.stack_z0 && z < lay.stack_z1;
        int body = -1;
        bool in_gap_z = false;
        if (in_stack_z) {
            for (std::size_t b = 0; b < lay.body_z.size(); ++b)
                if (z >= lay.body_z[b][0] && z < lay.body_z[b][1]) {
                    body = static_cast<int>(b);
                    break;
                }
            in_gap_z = body < 0;
        }
        for (std::int64_t j = 0; j < lay.dims[1]; ++j) {
            const double y = static_cast<double>(j) * sp[1];
            for (std::int64_t i = 0; i < lay.dims[0]; ++i, ++idx) {
                const double x = static_cast<double>(i) * sp[0];
                if (in_stack_z && in_ellipse(x, lay.cx, spec.canal_lr_half_axis_mm, y, lay.canal_cy,
                                             spec.canal_ap_half_axis_mm)) {
                    labels[idx] = canal_id;
                    image[idx] = spec.intensity_means.canal;
                } else if (in_ellipse(x, lay.cx, spec.body_half_axes_mm[0], y, lay.body_cy,
                                      spec.body_half_axes_mm[1])) {
                    if (body >= 0) {
                        labels[idx] = vertebra_ids[static_cast<std::size_t>(body)];
                        image[idx] = spec.intensity_means.body;
                    } else if (in_gap_z) {
                        image[idx] = spec.intensity_means.gap;  // disc space, label stays 0
                    }
                }
            }
        }
    }

    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(spec.seed);
        auto uniform = [&rng]() {
            return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        };
        for (double& v : image) {
            const double u1 = uniform();
            const double u2 = uniform();
            v += spec.noise_sigma * std::sqrt(-2.0 * std::log(1.0 - u1)) *
                 std::cos(2.0 * kPi * u2);
        }
    }

    GeneratedPhantom out{
        Volume(lay.dims, sp, {0, 0, 0}, std::move(image)),
        GroundTruth{LabelMap(lay.dims, sp, {0, 0, 0}, std::move(labels), scheme), {}, spec}};

    morpho::MeasurementReport& report = out.truth.measurements;
    report.spacing_mm = sp;
    report.orientation = "RAS";
    report.algorithm = "constructed/1";
    for (std::size_t p = 0; p + 1 < names.size(); ++p) {
        morpho::LevelMeasurement lm;
        lm.level = names[p] + "-" + names[p + 1];
        lm.disc_height_mm = spec.disc_gaps_mm[p];
        lm.canal_ap_diameter_mm = 2.0 * spec.canal_ap_half_axis_mm;
        report.levels.push_back(std::move(lm));
    }
    return out;
}

json PhantomSpec::to_json() const {
    json j{
        {"region", region},
        {"n_vertebrae", n_vertebrae},
        {"body_half_axes_mm", {round6(body_half_axes_mm[0]), round6(body_half_axes_mm[1])}},
        {"body_height_mm", round6(body_height_mm)},
        {"disc_gaps_mm", json::array()},
        {"canal_ap_half_axis_mm", round6(canal_ap_half_axis_mm)},
        {"canal_lr_half_axis_mm", round6(canal_lr_half_axis_mm)},
        {"canal_posterior_offset_mm", round6(canal_posterior_offset_mm)},
        {"intensity_means",
         {{"background", round6(intensity_means.background)},
          {"gap", round6(intensity_means.gap)},
          {"canal", round6(intensity_means.canal)},
          {"body", round6(intensity_means.body)}}},
        {"noise_sigma", round6(noise_sigma)},
        {"spacing_mm", {round6(spacing_mm[0]), round6(spacing_mm[1]), round6(spacing_mm[2])}},
        {"seed", seed},
    };
    for (double g : disc_gaps_mm) j["disc_gaps_mm"].push_back(round6(g));
    if (dims) j["dims"] = *dims;
    return j;
}

PhantomSpec PhantomSpec::from_json(const json& j) {
    PhantomSpec s;
    const char* what = "phantom spec";
    s.region = jsonutil::require_string(j, "region", what);
    s.n_vertebrae = jsonutil::require(j, "n_vertebrae", what).get<int>();
    auto ha = jsonutil::require(j, "body_half_axes_mm", what);
    s.body_half_axes_mm = {ha.at(0).get<double>(), ha.at(1).get<double>()};
    s.body_height_mm = jsonutil::require_number(j, "body_height_mm", what);
    s.disc_gaps_mm.clear();
    for (const json& g : jsonutil::require(j, "disc_gaps_mm", what))
        s.disc_gaps_mm.push_back(g.get<double>());
    s.canal_ap_half_axis_mm = jsonutil::require_number(j, "canal_ap_half_axis_mm", what);
    s.canal_lr_half_axis_mm = jsonutil::require_number(j, "canal_lr_half_axis_mm", what);
    s.canal_posterior_offset_mm = jsonutil::require_number(j, "canal_posterior_offset_mm", what);
    const json& im = jsonutil::require(j, "intensity_means", what);
    s.intensity_means.background = jsonutil::require_number(im, "background", what);
    s.intensity_means.gap = jsonutil::require_number(im, "gap", what);
    s.intensity_means.canal = jsonutil::require_number(im, "canal", what);
    s.intensity_means.body = jsonutil::require_number(im, "body", what);
    s.noise_sigma = jsonutil::require_number(j, "noise_sigma", what);
    auto sp = jsonutil::require(j, "spacing_mm", what);
    for (int a = 0; a < 3; ++a) s.spacing_mm[a] = sp.at(a).get<double>();
    s.seed = jsonutil::require(j, "seed", what).get<std::uint64_t>();
    if (j.contains("dims")) {
        Dims d{};
        for (int a = 0; a < 3; ++a) d[a] = j["dims"].at(a).get<std::int64_t>();
        s.dims = d;
    }
    return s;
}

json BaselineConfig::to_json() const {
    return json{
        {"class_means",
         {{"background", round6(class_means.background)},
          {"gap", round6(class_means.gap)},
          {"canal", round6(class_means.canal)},
          {"body", round6(class_means.body)}}},
        {"vertebrae", vertebrae},
        {"min_component_voxels", min_component_voxels},
        {"connectivity", connectivity},
    };
}

BaselineConfig BaselineConfig::from_json(const json& j) {
    BaselineConfig cfg;
    const char* what = "baseline segmenter config";
    const json& cm = jsonutil::require(j, "class_means", what);
    cfg.class_means.background = jsonutil::require_number(cm, "background", what);
    cfg.class_means.gap = jsonutil::require_number(cm, "gap", what);
    cfg.class_means.canal = jsonutil::require_number(cm, "canal", what);
    cfg.class_means.body = jsonutil::require_number(cm, "body", what);
    cfg.vertebrae.clear();
    for (const json& v : jsonutil::require(j, "vertebrae", what))
        cfg.vertebrae.push_back(v.get<std::string>());
    cfg.min_component_voxels = j.value("min_component_voxels", std::int64_t{50});
    cfg.connectivity = j.value("connectivity", 26);
    return cfg;
}

BaselineConfig BaselineConfig::from_phantom_spec(const PhantomSpec& spec) {
    BaselineConfig cfg;
    cfg.class_means = spec.intensity_means;
    cfg.vertebrae = spec.vertebra_names();
    return cfg;
}

LabelMap segment_baseline(const Volume& v, const BaselineConfig& cfg) {
    if (!v.orientation().is_canonical())
        fail(ErrorCode::Argument, "baseline segmentation requires canonical orientation");
    if (cfg.vertebrae.empty())
        fail(ErrorCode::Argument, "baseline config lists no vertebrae");
    const auto scheme = LabelScheme::default_scheme();
    std::vector<std::int32_t> expected_ids;
    for (const std::string& name : cfg.vertebrae) {
        auto id = scheme->id_of(name);
        if (!id)
            fail(ErrorCode::Argument, "unknown vertebra name '" + name + "' in baseline config");
        expected_ids.push_back(*id);
    }

    // nearest-mean classification; ties go to the class listed first
    const double means[4] = {cfg.class_means.background, cfg.class_means.gap,
                             cfg.class_means.canal, cfg.class_means.body};
    constexpr std::int32_t kBodyClass = 1;
    constexpr std::int32_t kCanalClass = 2;
    static const std::int32_t class_to_tissue[4] = {0, 0, kCanalClass, kBodyClass};

    const auto data = v.data();
    std::vector<std::int32_t> tissue(data.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        int best = 0;
        double best_d = std::abs(data[i] - means[0]);
        for (int c = 1; c < 4; ++c) {
            const double d = std::abs(data[i] - means[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        tissue[i] = class_to_tissue[best];
    }

    static const auto tissue_scheme = std::make_shared<const LabelScheme>(
        std::vector<LabelScheme::Entry>{{kBodyClass, "BODYTISSUE"}, {kCanalClass, "CANALTISSUE"}});
    LabelMap classified(v.dims(), v.spacing(), v.origin(), std::move(tissue), tissue_scheme);
    const LabelMap filtered = postseg::filter_small(classified, cfg.min_component_voxels,
                                                    cfg.connectivity);

    const postseg::ComponentAnalysis analysis = postseg::cc_label(filtered, cfg.connectivity);
    std::vector<const postseg::Component*> bodies;
    const postseg::Component* canal_best = nullptr;
    for (const postseg::Component& c : analysis.components) {
        if (c.label == kBodyClass) bodies.push_back(&c);
        if (c.label == kCanalClass && (!canal_best || c.voxel_count > canal_best->voxel_count))
            canal_best = &c;
    }
    if (bodies.size() != expected_ids.size()) {
        std::string sizes;
        for (const auto* c : bodies) {
            if (!sizes.empty()) sizes += ",";
            sizes += std::to_string(c->voxel_count);
        }
        fail(ErrorCode::Labeling, "expected " + std::to_string(expected_ids.size()) +
                                      " vertebra components, found " +
                                      std::to_string(bodies.size()) + " (sizes: " + sizes + ")");
    }
    std::sort(bodies.begin(), bodies.end(),
              [](const postseg::Component* a, const postseg::Component* b) {
                  if (a->centroid[2] != b->centroid[2]) return a->centroid[2] > b->centroid[2];
                  return a->id < b->id;
              });

    std::vector<std::int32_t> component_to_label(analysis.components.size() + 1, 0);
    for (std::size_t b = 0; b < bodies.size(); ++b)
        component_to_label[static_cast<std::size_t>(bodies[b]->id)] = expected_ids[b];
    if (canal_best)
        component_to_label[static_cast<std::size_t>(canal_best->id)] = scheme->canal_id();

    std::vector<std::int32_t> labels(data.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::int32_t comp = analysis.component_ids[i];
        if (comp != 0) labels[i] = component_to_label[static_cast<std::size_t>(comp)];
    }
    return LabelMap(v.dims(), v.spacing(), v.origin(), std::move(labels), scheme);
}

}  // namespace spm::phantom
