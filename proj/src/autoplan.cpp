#include "autoplan.hpp"

#include <algorithm>
#include <cmath>

namespace spm::autoplan {

using jsonutil::round6;

double median_lower_midpoint(std::vector<double> values) {
    if (values.empty())
        fail(ErrorCode::Argument, "median of empty set");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
    if (values.empty())
        fail(ErrorCode::Argument, "percentile of empty set");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::int64_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::int64_t>(rank, 1, values.size());
    return values[static_cast<std::size_t>(rank - 1)];
}

DatasetFingerprint fingerprint(const std::vector<const Volume*>& volumes,
                               const std::vector<const LabelMap*>& masks) {
    if (volumes.empty())
        fail(ErrorCode::Argument, "fingerprint requires at least one volume");
    if (!masks.empty() && masks.size() != volumes.size())
        fail(ErrorCode::Argument, "mask count does not match volume count");

    DatasetFingerprint fp{};
    fp.n_volumes = volumes.size();

    std::array<std::vector<double>, 3> spacings;
    std::vector<double> foreground;
    for (std::size_t vi = 0; vi < volumes.size(); ++vi) {
        const Volume& v = *volumes[vi];
        fp.per_volume.push_back({v.dims(), v.spacing()});
        for (int a = 0; a < 3; ++a) spacings[a].push_back(v.spacing()[a]);

        const auto data = v.data();
        if (!masks.empty()) {
            const LabelMap& m = *masks[vi];
            if (m.dims() != v.dims())
                fail(ErrorCode::Argument, "mask grid does not match its volume");
            const auto labels = m.data();
            for (std::size_t i = 0; i < data.size(); ++i)
                if (labels[i] != 0) foreground.push_back(data[i]);
        } else {
            foreground.insert(foreground.end(), data.begin(), data.end());
        }
    }
    if (foreground.empty())
        fail(ErrorCode::Argument, "masks select no foreground voxels");

    for (int a = 0; a < 3; ++a) fp.median_spacing[a] = median_lower_midpoint(spacings[a]);
    fp.fg_p0_5 = percentile_nearest_rank(foreground, 0.5);
    fp.fg_p99_5 = percentile_nearest_rank(foreground, 99.5);

    double sum = 0.0;
    for (double x : foreground) sum += x;
    fp.fg_mean = sum / static_cast<double>(foreground.size());
    double ss = 0.0;
    for (double x : foreground) ss += (x - fp.fg_mean) * (x - fp.fg_mean);
    fp.fg_std = std::sqrt(ss / static_cast<double>(foreground.size()));
    return fp;
}

json DatasetFingerprint::to_json() const {
    json per = json::array();
    for (const VolumeSummary& s : per_volume) {
        per.push_back({{"dims", s.dims},
                       {"spacing_mm", {round6(s.spacing[0]), round6(s.spacing[1]), round6(s.spacing[2])}}});
    }
    return json{
        {"n_volumes", n_volumes},
        {"per_volume", per},
        {"median_spacing_mm",
         {round6(median_spacing[0]), round6(median_spacing[1]), round6(median_spacing[2])}},
        {"foreground",
         {{"p0_5", round6(fg_p0_5)},
          {"p99_5", round6(fg_p99_5)},
          {"mean", round6(fg_mean)},
          {"std", round6(fg_std)}}},
    };
}

DatasetFingerprint DatasetFingerprint::from_json(const json& j) {
    DatasetFingerprint fp{};
    const char* what = "dataset fingerprint";
    fp.n_volumes = jsonutil::require(j, "n_volumes", what).get<std::size_t>();
    for (const json& p : jsonutil::require(j, "per_volume", what)) {
        VolumeSummary s{};
        auto dims = jsonutil::require(p, "dims", what);
        auto sp = jsonutil::require(p, "spacing_mm", what);
        for (int a = 0; a < 3; ++a) {
            s.dims[a] = dims.at(a).get<std::int64_t>();
            s.spacing[a] = sp.at(a).get<double>();
        }
        fp.per_volume.push_back(s);
    }
    auto med = jsonutil::require(j, "median_spacing_mm", what);
    for (int a = 0; a < 3; ++a) fp.median_spacing[a] = med.at(a).get<double>();
    const json& fg = jsonutil::require(j, "foreground", what);
    fp.fg_p0_5 = jsonutil::require_number(fg, "p0_5", what);
    fp.fg_p99_5 = jsonutil::require_number(fg, "p99_5", what);
    fp.fg_mean = jsonutil::require_number(fg, "mean", what);
    fp.fg_std = jsonutil::require_number(fg, "std", what);
    return fp;
}

SegPlan make_plan(const DatasetFingerprint& fp) {
    SegPlan plan;
    plan.fingerprint = fp;
    return plan;
}

json SegPlan::to_json() const {
    return json{
        {"target_spacing_mm",
         {round6(target_spacing[0]), round6(target_spacing[1]), round6(target_spacing[2])}},
        {"patch_size_voxels", patch_size},
        {"batch_size", batch_size},
        {"loss_weights", {{"dice", round6(loss_weight_dice)}, {"cross_entropy", round6(loss_weight_ce)}}},
        {"learning_rate",
         {{"initial", round6(initial_learning_rate)},
          {"schedule", "polynomial"},
          {"exponent", round6(poly_decay_exponent)},
          {"note", "training hyperparameter, recorded for provenance only"}}},
        {"kernel_size", kernel_size},
        {"feature_maps", {{"min", feature_maps_min}, {"max", feature_maps_max}}},
        {"min_component_voxels", min_component_voxels},
        {"normalization", normalization},
        {"fingerprint", fingerprint.to_json()},
        {"assumptions",
         {"target spacing applied uniformly to cervical, dorsal and lumbar regions"}},
        {"measurement_model",
         // reference values for the downstream measurement network; provenance
         // only, nothing in this toolkit consumes them
         {{"input_patch_voxels", {64, 64, 32}},
          {"conv_blocks", 5},
          {"kernel_size", {3, 3, 3}},
          {"stride", {1, 1, 1}},
          {"pool_size", {2, 2, 2}},
          {"optimizer", {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}}},
          {"dropout", 0.3},
          {"learning_rate", {{"initial", 0.001}, {"decay_factor", 0.9}, {"decay_every_epochs", 10}}},
          {"loss", "mse"}}},
    };
}

SegPlan SegPlan::from_json(const json& j) {
    SegPlan plan;
    const char* what = "segmentation plan";
    auto ts = jsonutil::require(j, "target_spacing_mm", what);
    for (int a = 0; a < 3; ++a) plan.target_spacing[a] = ts.at(a).get<double>();
    auto ps = jsonutil::require(j, "patch_size_voxels", what);
    for (int a = 0; a < 3; ++a) plan.patch_size[a] = ps.at(a).get<std::int64_t>();
    plan.batch_size = jsonutil::require(j, "batch_size", what).get<int>();
    const json& lw = jsonutil::require(j, "loss_weights", what);
    plan.loss_weight_dice = jsonutil::require_number(lw, "dice", what);
    plan.loss_weight_ce = jsonutil::require_number(lw, "cross_entropy", what);
    const json& lr = jsonutil::require(j, "learning_rate", what);
    plan.initial_learning_rate = jsonutil::require_number(lr, "initial", what);
    plan.poly_decay_exponent = jsonutil::require_number(lr, "exponent", what);
    auto ks = jsonutil::require(j, "kernel_size", what);
    for (int a = 0; a < 3; ++a) plan.kernel_size[a] = ks.at(a).get<std::int64_t>();
    const json& fm = jsonutil::require(j, "feature_maps", what);
    plan.feature_maps_min = jsonutil::require(fm, "min", what).get<int>();
    plan.feature_maps_max = jsonutil::require(fm, "max", what).get<int>();
    plan.min_component_voxels = jsonutil::require(j, "min_component_voxels", what).get<std::int64_t>();
    plan.normalization = jsonutil::require_string(j, "normalization", what);
    plan.fingerprint = DatasetFingerprint::from_json(jsonutil::require(j, "fingerprint", what));

    if (!(plan.loss_weight_dice >= 0) || !(plan.loss_weight_ce >= 0) ||
        std::abs(plan.loss_weight_dice + plan.loss_weight_ce - 1.0) > 1e-9)
        fail(ErrorCode::Format, "plan loss weights must be non-negative and sum to 1");
    for (int a = 0; a < 3; ++a)
        if (!(plan.target_spacing[a] > 0) || plan.patch_size[a] < 1 || plan.kernel_size[a] < 1)
            fail(ErrorCode::Format, "plan numeric fields must be positive");
    if (plan.batch_size < 1 || plan.min_component_voxels < 1 || !(plan.initial_learning_rate > 0))
        fail(ErrorCode::Format, "plan numeric fields must be positive");
    return plan;
}

}  // namespace spm::autoplan
