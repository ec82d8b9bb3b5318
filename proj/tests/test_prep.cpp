#include <random>
#include <set>

#include "doctest.h"
#include "prep.hpp"
#include "support.hpp"

using namespace spm;
using prep::ResampleMode;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Vec3;
using volgrid::Volume;

TEST_CASE("resample output dims follow the round-half-up rule") {
    // 64*1.0/1.25 = 51.2 -> 51; 64*2.5/1.25 = 128
    std::vector<double> data(64 * 64 * 64, 7.0);
    const Volume v({64, 64, 64}, {1.0, 1.0, 2.5}, {0, 0, 0}, data);
    const Volume r = prep::resample(v, {1.25, 1.25, 1.25});
    CHECK(r.dims() == Dims{51, 51, 128});
    CHECK(r.spacing() == Vec3{1.25, 1.25, 1.25});
    CHECK(r.origin() == v.origin());

    // exact .5 rounds up: 3*1.0/2.0 = 1.5 -> 2
    const Volume small({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, std::vector<double>(27, 0.0));
    CHECK(prep::resample(small, {2.0, 2.0, 2.0}).dims() == Dims{2, 2, 2});
}

TEST_CASE("resample at the input spacing is an identity") {
    std::mt19937 rng(3);
    const Volume v = testsup::random_volume(rng, 6);
    const Volume r = prep::resample(v, v.spacing());
    REQUIRE(r.dims() == v.dims());
    double range = 0;
    for (double x : v.data()) range = std::max(range, std::abs(x));
    for (std::size_t i = 0; i < v.data().size(); ++i)
        CHECK(std::abs(r.data()[i] - v.data()[i]) <= 1e-6 * std::max(range, 1.0));
}

TEST_CASE("trilinear resample of a constant volume stays constant") {
    const Volume v({7, 5, 6}, {1.0, 2.0, 0.7}, {0, 0, 0},
                   std::vector<double>(7 * 5 * 6, 42.5));
    const Volume r = prep::resample(v, {1.3, 1.3, 1.3});
    for (double x : r.data()) CHECK(x == doctest::Approx(42.5).epsilon(1e-6));
}

TEST_CASE("trilinear values interpolate linearly along an axis") {
    // 1-D ramp along x: f(i) = 3i; at target spacing 0.5 the sample at output
    // index i' lands at source coordinate i'/2, so values follow 1.5*i'
    std::vector<double> ramp(8);
    for (int i = 0; i < 8; ++i) ramp[static_cast<std::size_t>(i)] = 3.0 * i;
    const Volume v({8, 1, 1}, {1, 1, 1}, {0, 0, 0}, ramp);
    const Volume r = prep::resample(v, {0.5, 1.0, 1.0});
    REQUIRE(r.dims()[0] == 16);
    for (std::int64_t i = 0; i < r.dims()[0]; ++i) {
        const double expected = std::min(1.5 * static_cast<double>(i), 21.0);  // edge clamp
        CHECK(r.at(i, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("labelmap resampling preserves label-set containment") {
    std::vector<std::int32_t> labels(4 * 4 * 4, 0);
    labels[0] = 3;
    labels[21] = 7;
    labels[63] = 3;
    const LabelMap m({4, 4, 4}, {1, 1, 1}, {0, 0, 0}, labels);
    const LabelMap r = prep::resample(m, {0.8, 0.8, 0.8});
    const auto out_labels = r.present_labels();
    const std::set<std::int32_t> allowed = {3, 7};
    for (std::int32_t l : out_labels) CHECK(allowed.count(l) == 1);

    CHECK_THROWS_AS(prep::resample(m, {1.0, 1.0, 1.0}, ResampleMode::Trilinear), Error);
    CHECK_THROWS_AS(prep::resample(m, {0.0, 1.0, 1.0}), Error);
}

TEST_CASE("resampling preserves physical extent within one output voxel") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> target_dist(0.4, 3.5);
    for (int trial = 0; trial < 200; ++trial) {
        const Volume v = testsup::random_volume(rng, 10);
        const Vec3 target{target_dist(rng), target_dist(rng), target_dist(rng)};
        const Volume r = prep::resample(v, target);
        for (int a = 0; a < 3; ++a) {
            const double in_extent = static_cast<double>(v.dims()[a]) * v.spacing()[a];
            const double out_extent = static_cast<double>(r.dims()[a]) * target[a];
            CHECK(std::abs(out_extent - in_extent) <= target[a] + 1e-9);
        }
    }
}

TEST_CASE("zscore hand example: (0,0,4,4) -> (-1,-1,1,1)") {
    const Volume v({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0, 0, 4, 4});
    const auto r = prep::zscore(v);
    CHECK_FALSE(r.degenerate_std);
    CHECK(r.mean == 2.0);
    CHECK(r.stddev == 2.0);  // population std
    CHECK(r.volume.data()[0] == -1.0);
    CHECK(r.volume.data()[1] == -1.0);
    CHECK(r.volume.data()[2] == 1.0);
    CHECK(r.volume.data()[3] == 1.0);
}

TEST_CASE("zscore of a constant volume zero-fills and flags") {
    const Volume v({3, 2, 1}, {1, 1, 1}, {0, 0, 0}, std::vector<double>(6, 5.5));
    const auto r = prep::zscore(v);
    CHECK(r.degenerate_std);
    for (double x : r.volume.data()) CHECK(x == 0.0);
}

TEST_CASE("zscore output has mean 0 and std 1") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Volume v = testsup::random_volume(rng, 7);
        if (v.voxel_count() < 2) continue;
        const auto r = prep::zscore(v);
        if (r.degenerate_std) continue;
        double sum = 0;
        for (double x : r.volume.data()) sum += x;
        const double mean = sum / static_cast<double>(r.volume.voxel_count());
        double ss = 0;
        for (double x : r.volume.data()) ss += (x - mean) * (x - mean);
        const double stddev = std::sqrt(ss / static_cast<double>(r.volume.voxel_count()));
        CHECK(std::abs(mean) <= 1e-5);
        CHECK(std::abs(stddev - 1.0) <= 1e-5);

        // idempotence within 1e-5
        const auto again = prep::zscore(r.volume);
        for (std::size_t i = 0; i < again.volume.data().size(); ++i)
            CHECK(std::abs(again.volume.data()[i] - r.volume.data()[i]) <= 1e-5);
    }
}

TEST_CASE("zscore with a mask uses region statistics") {
    // region = last two voxels (4, 8): mean 6, std 2
    const Volume v({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {100, -50, 4, 8});
    const LabelMap mask({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0, 0, 1, 1});
    const auto r = prep::zscore(v, &mask);
    CHECK(r.mean == 6.0);
    CHECK(r.stddev == 2.0);
    CHECK(r.volume.data()[2] == -1.0);
    CHECK(r.volume.data()[3] == 1.0);
    CHECK(r.volume.data()[0] == 47.0);  // (100-6)/2

    const LabelMap empty_mask({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0, 0, 0, 0});
    CHECK_THROWS_AS(prep::zscore(v, &empty_mask), Error);
    const LabelMap one_voxel({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1, 0, 0, 0});
    CHECK_THROWS_AS(prep::zscore(v, &one_voxel), Error);
}

TEST_CASE("window maps the WW/WC parameters as specified") {
    const prep::WindowSpec w{200.0, 300.0};
    const Volume v({5, 1, 1}, {1, 1, 1}, {0, 0, 0}, {300, 200, 400, 350, -1000});
    const Volume r = prep::window(v, w);
    CHECK(r.data()[0] == 0.5);   // x = WC
    CHECK(r.data()[1] == 0.0);   // x = WC - WW/2
    CHECK(r.data()[2] == 1.0);   // x = WC + WW/2
    CHECK(r.data()[3] == 0.75);  // (350-200)/200
    CHECK(r.data()[4] == 0.0);   // clamped

    CHECK_THROWS_AS(prep::window(v, {0.0, 10.0}), Error);
    CHECK_THROWS_AS(prep::window(v, {std::numeric_limits<double>::infinity(), 0.0}), Error);
}

TEST_CASE("window is monotone and bounded") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> val(-500, 500);
    const prep::WindowSpec w{120.0, 40.0};
    for (int trial = 0; trial < 200; ++trial) {
        const double a = val(rng), b = val(rng);
        const Volume v({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, {std::min(a, b), std::max(a, b)});
        const Volume r = prep::window(v, w);
        CHECK(r.data()[0] <= r.data()[1]);
        CHECK(r.data()[0] >= 0.0);
        CHECK(r.data()[1] <= 1.0);
    }
}
