#include <random>

#include "doctest.h"
#include "support.hpp"
#include "volgrid.hpp"

using namespace spm;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Orientation;
using volgrid::Vec3;
using volgrid::Volume;

namespace {

Volume make_volume(Dims dims, Vec3 spacing, Vec3 origin, Orientation o = Orientation::canonical()) {
    std::vector<double> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i);
    return Volume(dims, spacing, origin, std::move(data), o);
}

}  // namespace

TEST_CASE("volume construction enforces invariants") {
    CHECK_THROWS_AS(Volume({0, 1, 1}, {1, 1, 1}, {0, 0, 0}, {}), Error);
    CHECK_THROWS_AS(Volume({1, 1, 1}, {0, 1, 1}, {0, 0, 0}, {1.0}), Error);
    CHECK_THROWS_AS(Volume({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1.0}), Error);  // length mismatch
    CHECK_THROWS_AS(Volume({1, 1, 1}, {1, 1, 1}, {0, 0, 0},
                           {std::numeric_limits<double>::quiet_NaN()}),
                    Error);
    CHECK_NOTHROW(Volume({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0.5}));
}

TEST_CASE("labelmap rejects labels outside the scheme") {
    CHECK_THROWS_AS(LabelMap({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {99}), Error);
    CHECK_THROWS_AS(LabelMap({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {-1}), Error);
    CHECK_NOTHROW(LabelMap({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {0}));
    CHECK_NOTHROW(LabelMap({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {26}));  // canal
}

TEST_CASE("voxel_to_world on fixed points") {
    const Volume v1 = make_volume({3, 3, 3}, {2.0, 3.0, 4.0}, {0, 0, 0});
    CHECK(volgrid::voxel_to_world(v1, {0, 0, 0}) == Vec3{0, 0, 0});

    const Volume v2 = make_volume({3, 1, 5}, {1.25, 1.25, 1.25}, {0, 0, 0});
    const Vec3 w2 = volgrid::voxel_to_world(v2, {2, 0, 4});
    CHECK(w2[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(w2[1] == doctest::Approx(0.0));
    CHECK(w2[2] == doctest::Approx(5.0).epsilon(1e-12));

    const Volume v3 = make_volume({11, 1, 1}, {1, 1, 1}, {-10, 0, 0});
    CHECK(volgrid::voxel_to_world(v3, {10, 0, 0}) == Vec3{0, 0, 0});

    CHECK_THROWS_AS(volgrid::voxel_to_world(v1, {3, 0, 0}), Error);
    CHECK_THROWS_AS(volgrid::voxel_to_world(v1, {-1, 0, 0}), Error);
}

TEST_CASE("world_to_voxel inverts voxel_to_world on grid points") {
    const Volume v = make_volume({3, 1, 5}, {1.25, 1.25, 1.25}, {0, 0, 0});
    const Vec3 u = volgrid::world_to_voxel(v, {2.5, 0.0, 5.0});
    CHECK(u[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(u[2] == doctest::Approx(4.0).epsilon(1e-12));

    // outside the grid: no error, fractional/negative coordinates
    const Vec3 outside = volgrid::world_to_voxel(v, {-5.0, 0.0, 100.0});
    CHECK(outside[0] < 0.0);
    CHECK(outside[2] > 4.0);
}

TEST_CASE("world/voxel round trip is exact on random grids") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Volume v = testsup::random_volume(rng);
        std::uniform_int_distribution<std::int64_t> pick_i(0, v.dims()[0] - 1);
        std::uniform_int_distribution<std::int64_t> pick_j(0, v.dims()[1] - 1);
        std::uniform_int_distribution<std::int64_t> pick_k(0, v.dims()[2] - 1);
        const Dims idx{pick_i(rng), pick_j(rng), pick_k(rng)};
        const Vec3 round = volgrid::world_to_voxel(v, volgrid::voxel_to_world(v, idx));
        for (int a = 0; a < 3; ++a)
            CHECK(std::abs(round[a] - static_cast<double>(idx[a])) <= 1e-9);
    }
}

TEST_CASE("orientation parsing") {
    CHECK(Orientation::parse("RAS").is_canonical());
    CHECK_FALSE(Orientation::parse("LPS").is_canonical());
    CHECK(Orientation::parse("SAR").str() == "SAR");
    CHECK_THROWS_AS(Orientation::parse("RRS"), Error);  // axis used twice
    CHECK_THROWS_AS(Orientation::parse("XYZ"), Error);
    CHECK_THROWS_AS(Orientation::parse("RA"), Error);
}

TEST_CASE("reorient: canonical input is returned bit-identical") {
    const Volume v = make_volume({2, 3, 4}, {1, 2, 3}, {5, 6, 7});
    const Volume r = volgrid::reorient_to_canonical(v);
    CHECK(r.dims() == v.dims());
    CHECK(r.spacing() == v.spacing());
    CHECK(r.origin() == v.origin());
    CHECK(std::equal(r.data().begin(), r.data().end(), v.data().begin()));
}

TEST_CASE("reorient: x<->z axis swap on a 2x1x3 grid") {
    // data in "SAR" order: index axis 0 runs superior, axis 2 runs right.
    // values enumerated by hand; voxel (i,j,k) has value i + 2*k
    const Volume v = make_volume({2, 1, 3}, {1, 1, 1}, {0, 0, 0}, Orientation::parse("SAR"));
    const Volume r = volgrid::reorient_to_canonical(v);
    CHECK(r.dims() == Dims{3, 1, 2});
    CHECK(r.spacing() == Vec3{1, 1, 1});
    // canonical voxel (i', 0, k') corresponds to source voxel (k', 0, i')
    for (std::int64_t kp = 0; kp < 2; ++kp)
        for (std::int64_t ip = 0; ip < 3; ++ip)
            CHECK(r.at(ip, 0, kp) == v.at(kp, 0, ip));
}

TEST_CASE("reorient: flips are involutions") {
    const Dims dims{3, 2, 4};
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> val(-5, 5);
    std::vector<double> data(24);
    for (double& x : data) x = val(rng);

    for (const char* codes : {"LAS", "RPS", "RAI", "LPI"}) {
        const Volume v(dims, {1, 1, 1}, {0, 0, 0}, data, Orientation::parse(codes));
        const Volume once = volgrid::reorient_to_canonical(v, Orientation::parse(codes));
        // relabel the flipped volume with the same codes and flip again
        const Volume relabeled(once.dims(), once.spacing(), once.origin(),
                               {once.data().begin(), once.data().end()},
                               Orientation::parse(codes));
        const Volume twice = volgrid::reorient_to_canonical(relabeled, Orientation::parse(codes));
        CHECK(std::equal(twice.data().begin(), twice.data().end(), data.begin()));
    }
}

TEST_CASE("reorient preserves physical extent and the value multiset") {
    std::mt19937 rng(99);
    const char* all_codes[] = {"RAS", "LPS", "SAR", "IPL", "ASR", "PIL", "SRA"};
    for (int trial = 0; trial < 50; ++trial) {
        const Volume v = testsup::random_volume(rng);
        const Orientation o = Orientation::parse(all_codes[trial % 7]);
        const Volume relabeled(v.dims(), v.spacing(), v.origin(),
                               {v.data().begin(), v.data().end()}, o);
        const Volume r = volgrid::reorient_to_canonical(relabeled, o);

        double extent_in = 0, extent_out = 0;
        for (int a = 0; a < 3; ++a) {
            extent_in += static_cast<double>(v.dims()[a]) * v.spacing()[a];
            extent_out += static_cast<double>(r.dims()[a]) * r.spacing()[a];
        }
        CHECK(extent_in == extent_out);  // exact: same multiset of products

        std::vector<double> in(v.data().begin(), v.data().end());
        std::vector<double> out(r.data().begin(), r.data().end());
        std::sort(in.begin(), in.end());
        std::sort(out.begin(), out.end());
        CHECK(in == out);
    }
}

TEST_CASE("reorient keeps label sets and world positions of labels") {
    // an L-shaped labeled region in LPI orientation; every labeled voxel must
    // land at the same world coordinate after canonicalization
    const Dims dims{3, 2, 2};
    std::vector<std::int32_t> labels(12, 0);
    labels[0] = 20;  // L1
    labels[5] = 21;  // L2
    labels[11] = 26; // CANAL
    const Orientation o = Orientation::parse("LPI");
    const LabelMap m(dims, {1.5, 2.0, 1.0}, {10, 20, 30}, labels,
                     volgrid::LabelScheme::default_scheme(), o);
    const LabelMap r = volgrid::reorient_to_canonical(m, o);

    CHECK(r.present_labels() == m.present_labels());

    // collect world coordinates of each label on both sides
    auto locate = [](const LabelMap& lm, std::int32_t label) {
        for (std::int64_t k = 0; k < lm.dims()[2]; ++k)
            for (std::int64_t j = 0; j < lm.dims()[1]; ++j)
                for (std::int64_t i = 0; i < lm.dims()[0]; ++i)
                    if (lm.at(i, j, k) == label) return volgrid::voxel_to_world(lm, {i, j, k});
        return Vec3{-1e9, -1e9, -1e9};
    };
    for (std::int32_t label : {20, 21, 26}) {
        const Vec3 a = locate(m, label);
        const Vec3 b = locate(r, label);
        for (int ax = 0; ax < 3; ++ax) CHECK(a[ax] == doctest::Approx(b[ax]).epsilon(1e-12));
    }
}

TEST_CASE("default label scheme covers the full column") {
    const auto scheme = volgrid::LabelScheme::default_scheme();
    CHECK(scheme->id_of("C1").value() == 1);
    CHECK(scheme->id_of("C7").value() == 7);
    CHECK(scheme->id_of("D1").value() == 8);
    CHECK(scheme->id_of("D12").value() == 19);
    CHECK(scheme->id_of("L1").value() == 20);
    CHECK(scheme->id_of("L5").value() == 24);
    CHECK(scheme->id_of("S1").value() == 25);
    CHECK(scheme->canal_id() == 26);
    CHECK(scheme->is_vertebra(*scheme->id_of("S1")));
    CHECK_FALSE(scheme->is_vertebra(scheme->canal_id()));
    // strict superior->inferior order
    const auto order = scheme->vertebrae_in_order();
    CHECK(order.size() == 25);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        CHECK(scheme->anatomical_index(order[i]) + 1 == scheme->anatomical_index(order[i + 1]));
}
