#include <random>

#include "autoplan.hpp"
#include "doctest.h"
#include "jsonutil.hpp"
#include "support.hpp"

using namespace spm;
using autoplan::DatasetFingerprint;
using autoplan::SegPlan;
using volgrid::LabelMap;
using volgrid::Volume;

TEST_CASE("median and percentile rules") {
    CHECK(autoplan::median_lower_midpoint({1.0, 2.5, 5.0}) == 2.5);
    CHECK(autoplan::median_lower_midpoint({4.0, 1.0}) == 1.0);  // lower midpoint
    CHECK(autoplan::median_lower_midpoint({7.0}) == 7.0);
    CHECK(autoplan::percentile_nearest_rank({5.0}, 0.5) == 5.0);
    CHECK(autoplan::percentile_nearest_rank({5.0}, 99.5) == 5.0);
    CHECK(autoplan::percentile_nearest_rank({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 50.0) == 5.0);
    CHECK_THROWS_AS(autoplan::median_lower_midpoint({}), Error);
}

TEST_CASE("fingerprint aggregates spacing medians") {
    auto vol = [](double sz) {
        return Volume({2, 2, 2}, {1.0, 1.0, sz}, {0, 0, 0}, std::vector<double>(8, 1.0));
    };
    const Volume a = vol(1.0), b = vol(2.5), c = vol(5.0);
    const auto fp = autoplan::fingerprint({&a, &b, &c});
    CHECK(fp.n_volumes == 3);
    CHECK(fp.median_spacing[2] == 2.5);
    CHECK(fp.median_spacing[0] == 1.0);

    CHECK_THROWS_AS(autoplan::fingerprint({}), Error);
}

TEST_CASE("fingerprint of a constant volume has collapsed percentiles") {
    const Volume v({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, std::vector<double>(27, 77.0));
    const auto fp = autoplan::fingerprint({&v});
    CHECK(fp.fg_p0_5 == 77.0);
    CHECK(fp.fg_p99_5 == 77.0);
    CHECK(fp.fg_mean == 77.0);
    CHECK(fp.fg_std == 0.0);
}

TEST_CASE("fingerprint foreground respects masks") {
    const Volume v({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1000, 2, 4, 1000});
    const LabelMap mask({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0, 1, 1, 0});
    const auto fp = autoplan::fingerprint({&v}, {&mask});
    CHECK(fp.fg_mean == 3.0);
    CHECK(fp.fg_p0_5 == 2.0);
    CHECK(fp.fg_p99_5 == 4.0);
}

TEST_CASE("fingerprint medians are permutation invariant") {
    std::mt19937 rng(31);
    std::vector<Volume> vols;
    for (int i = 0; i < 5; ++i) vols.push_back(testsup::random_volume(rng, 5));
    std::vector<const Volume*> order1{&vols[0], &vols[1], &vols[2], &vols[3], &vols[4]};
    std::vector<const Volume*> order2{&vols[3], &vols[0], &vols[4], &vols[2], &vols[1]};
    const auto fp1 = autoplan::fingerprint(order1);
    const auto fp2 = autoplan::fingerprint(order2);
    CHECK(fp1.median_spacing == fp2.median_spacing);
    CHECK(fp1.fg_p0_5 == fp2.fg_p0_5);
    CHECK(fp1.fg_p99_5 == fp2.fg_p99_5);
}

TEST_CASE("plan carries the fixed configuration values") {
    const Volume v({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, std::vector<double>(8, 1.0));
    const auto plan = autoplan::make_plan(autoplan::fingerprint({&v}));
    CHECK(plan.target_spacing == volgrid::Vec3{1.25, 1.25, 1.25});
    CHECK(plan.patch_size == volgrid::Dims{128, 128, 64});
    CHECK(plan.batch_size == 2);
    CHECK(plan.loss_weight_dice == 0.7);
    CHECK(plan.loss_weight_ce == 0.3);
    CHECK(plan.initial_learning_rate == 0.01);
    CHECK(plan.kernel_size == volgrid::Dims{3, 3, 3});
    CHECK(plan.feature_maps_min == 32);
    CHECK(plan.feature_maps_max == 320);
    CHECK(plan.min_component_voxels == 50);
    CHECK(plan.normalization == "zscore");
    CHECK(plan.loss_weight_dice + plan.loss_weight_ce == 1.0);
}

TEST_CASE("plan serialization round-trips losslessly and deterministically") {
    const Volume v({4, 2, 3}, {0.8, 1.0, 3.0}, {1, 2, 3}, std::vector<double>(24, 5.0));
    const Volume w({2, 2, 2}, {1.5, 1.5, 1.5}, {0, 0, 0}, std::vector<double>(8, 9.0));
    const auto fp = autoplan::fingerprint({&v, &w});
    const auto plan = autoplan::make_plan(fp);

    const std::string text = jsonutil::dump_canonical(plan.to_json());
    const auto parsed = SegPlan::from_json(jsonutil::parse(text, "plan"));
    CHECK(parsed == plan);
    CHECK(jsonutil::dump_canonical(parsed.to_json()) == text);

    // identical fingerprints -> byte-identical documents
    const auto plan2 = autoplan::make_plan(fp);
    CHECK(jsonutil::dump_canonical(plan2.to_json()) == text);
}

TEST_CASE("fingerprint JSON round-trips") {
    const Volume v({2, 2, 2}, {1, 1, 2.5}, {0, 0, 0}, std::vector<double>(8, 3.0));
    const auto fp = autoplan::fingerprint({&v});
    const auto parsed = DatasetFingerprint::from_json(fp.to_json());
    CHECK(parsed == fp);
}
