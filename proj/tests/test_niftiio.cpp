#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include "doctest.h"
#include "niftiio.hpp"
#include "support.hpp"

using namespace spm;
using niftiio::Datatype;
using volgrid::Dims;
using volgrid::LabelMap;
using volgrid::Vec3;
using volgrid::Volume;

namespace {

// Independent little-endian header builder so the reader is checked against
// bytes the writer never produced.
struct HeaderBuilder {
    std::vector<unsigned char> bytes = std::vector<unsigned char>(348, 0);

    void u32(std::size_t off, std::uint32_t v) {
        for (int b = 0; b < 4; ++b) bytes[off + b] = static_cast<unsigned char>(v >> (8 * b));
    }
    void i16(std::size_t off, std::int16_t v) {
        bytes[off] = static_cast<unsigned char>(v & 0xff);
        bytes[off + 1] = static_cast<unsigned char>((v >> 8) & 0xff);
    }
    void f32(std::size_t off, float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(off, u);
    }

    HeaderBuilder(Dims dims, Vec3 pixdim, std::int16_t datatype, std::int16_t bitpix) {
        u32(0, 348);
        i16(40, 3);
        for (int a = 0; a < 3; ++a) i16(40 + 2 * (a + 1), static_cast<std::int16_t>(dims[a]));
        i16(70, datatype);
        i16(72, bitpix);
        for (int a = 0; a < 3; ++a) f32(76 + 4 * (a + 1), static_cast<float>(pixdim[a]));
        f32(108, 352.0f);
        std::memcpy(bytes.data() + 344, "n+1\0", 4);
    }

    void set_sform(const float m[3][4]) {
        i16(254, 1);
        const std::size_t rows[3] = {280, 296, 312};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) f32(rows[r] + 4 * c, m[r][c]);
    }
};

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> with_payload(HeaderBuilder h, const std::vector<float>& values) {
    std::vector<unsigned char> file = h.bytes;
    file.resize(352, 0);
    for (float v : values) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        for (int b = 0; b < 4; ++b) file.push_back(static_cast<unsigned char>(u >> (8 * b)));
    }
    return file;
}

std::vector<unsigned char> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Argument;  // placeholder; callers assert a specific kind
}

}  // namespace

TEST_CASE("hand-built float32 fixture parses with the stated geometry") {
    testsup::TempDir tmp("nifti_fixture");
    const Dims dims{64, 64, 64};
    HeaderBuilder h(dims, {1.0, 1.0, 2.5}, 16, 32);
    std::vector<float> values(64 * 64 * 64);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<float>(i % 977) * 0.5f;
    write_bytes(tmp.path("fixture.nii"), with_payload(h, values));

    const Volume v = niftiio::read_volume(tmp.path("fixture.nii"));
    CHECK(v.dims() == dims);
    CHECK(v.spacing() == Vec3{1.0, 1.0, 2.5});
    CHECK(v.origin() == Vec3{0, 0, 0});
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(v.data()[i] == static_cast<double>(values[i]));
}

TEST_CASE("scl_slope and scl_inter are applied on read; slope 0 means 1") {
    testsup::TempDir tmp("nifti_scl");
    HeaderBuilder h({2, 1, 1}, {1, 1, 1}, 2, 8);  // uint8
    h.f32(112, 2.0f);   // slope
    h.f32(116, 10.0f);  // inter
    std::vector<unsigned char> file = h.bytes;
    file.resize(352, 0);
    file.push_back(5);
    file.push_back(7);
    write_bytes(tmp.path("scaled.nii"), file);
    const Volume v = niftiio::read_volume(tmp.path("scaled.nii"));
    CHECK(v.data()[0] == 20.0);
    CHECK(v.data()[1] == 24.0);

    HeaderBuilder h0({1, 1, 1}, {1, 1, 1}, 2, 8);
    h0.f32(112, 0.0f);  // slope 0 -> treated as 1
    std::vector<unsigned char> file0 = h0.bytes;
    file0.resize(352, 0);
    file0.push_back(9);
    write_bytes(tmp.path("slope0.nii"), file0);
    CHECK(niftiio::read_volume(tmp.path("slope0.nii")).data()[0] == 9.0);
}

TEST_CASE("round trip is bit-identical for all three datatypes") {
    testsup::TempDir tmp("nifti_roundtrip");
    std::mt19937 rng(11);

    const Dims dims{5, 4, 3};
    const Vec3 spacing{0.9, 1.1, 2.0};
    const Vec3 origin{-4.0, 2.5, 11.0};
    const std::size_t n = 60;

    SUBCASE("uint8") {
        std::vector<double> data(n);
        std::uniform_int_distribution<int> d(0, 255);
        for (double& x : data) x = d(rng);
        const Volume v(dims, spacing, origin, data);
        niftiio::write_volume(v, tmp.path("u8.nii"), Datatype::UInt8);
        const Volume r = niftiio::read_volume(tmp.path("u8.nii"));
        CHECK(std::equal(r.data().begin(), r.data().end(), data.begin()));
        CHECK(r.dims() == dims);
        CHECK(r.origin() == origin);
    }
    SUBCASE("int16") {
        std::vector<double> data(n);
        std::uniform_int_distribution<int> d(-32768, 32767);
        for (double& x : data) x = d(rng);
        const Volume v(dims, spacing, origin, data);
        niftiio::write_volume(v, tmp.path("i16.nii"), Datatype::Int16);
        const Volume r = niftiio::read_volume(tmp.path("i16.nii"));
        CHECK(std::equal(r.data().begin(), r.data().end(), data.begin()));
    }
    SUBCASE("float32") {
        std::vector<double> data(n);
        std::uniform_real_distribution<float> d(-1e3f, 1e3f);
        for (double& x : data) x = static_cast<double>(d(rng));
        const Volume v(dims, spacing, origin, data);
        niftiio::write_volume(v, tmp.path("f32.nii"), Datatype::Float32);
        const Volume r = niftiio::read_volume(tmp.path("f32.nii"));
        CHECK(std::equal(r.data().begin(), r.data().end(), data.begin()));
    }
}

TEST_CASE("write-read-write is byte stable from the second write onward") {
    testsup::TempDir tmp("nifti_canonical");
    std::mt19937 rng(13);
    std::vector<double> data(24);
    std::uniform_real_distribution<double> d(-10, 10);
    for (double& x : data) x = d(rng);

    // doubles narrow to float on the first write; from then on every write
    // must produce identical bytes
    const Volume v({4, 3, 2}, {1.25, 1.25, 1.25}, {1, 2, 3}, data);
    niftiio::write_volume(v, tmp.path("a.nii"), Datatype::Float32);
    const Volume r1 = niftiio::read_volume(tmp.path("a.nii"));
    niftiio::write_volume(r1, tmp.path("b.nii"), Datatype::Float32);
    const Volume r2 = niftiio::read_volume(tmp.path("b.nii"));
    niftiio::write_volume(r2, tmp.path("c.nii"), Datatype::Float32);
    CHECK(read_all(tmp.path("b.nii")) == read_all(tmp.path("c.nii")));
}

TEST_CASE("malformed headers are rejected with the designated error kinds") {
    testsup::TempDir tmp("nifti_malformed");
    const HeaderBuilder good({2, 2, 2}, {1, 1, 1}, 2, 8);

    SUBCASE("two-file magic ni1") {
        HeaderBuilder h = good;
        std::memcpy(h.bytes.data() + 344, "ni1\0", 4);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("ni1.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("ni1.nii")); }) ==
              ErrorCode::UnsupportedFormat);
    }
    SUBCASE("garbage magic") {
        HeaderBuilder h = good;
        std::memcpy(h.bytes.data() + 344, "xyz\0", 4);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("badmagic.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("badmagic.nii")); }) ==
              ErrorCode::BadMagic);
    }
    SUBCASE("not a nifti at all") {
        write_bytes(tmp.path("noise.nii"), std::vector<unsigned char>(400, 0xAB));
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("noise.nii")); }) ==
              ErrorCode::BadMagic);
    }
    SUBCASE("big-endian header") {
        HeaderBuilder h = good;
        h.bytes[0] = 0; h.bytes[1] = 0; h.bytes[2] = 0x01; h.bytes[3] = 0x5C;  // 348 big-endian
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("be.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("be.nii")); }) == ErrorCode::ByteOrder);
    }
    SUBCASE("truncated header") {
        std::vector<unsigned char> file(good.bytes.begin(), good.bytes.begin() + 100);
        write_bytes(tmp.path("shorthdr.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("shorthdr.nii")); }) ==
              ErrorCode::Truncated);
    }
    SUBCASE("truncated payload") {
        std::vector<unsigned char> file = good.bytes;
        file.resize(352 + 3, 0);  // needs 8 voxels
        write_bytes(tmp.path("shortpay.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("shortpay.nii")); }) ==
              ErrorCode::Truncated);
    }
    SUBCASE("unsupported datatype") {
        HeaderBuilder h({2, 2, 2}, {1, 1, 1}, 64, 64);  // float64
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 64, 0);
        write_bytes(tmp.path("f64.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("f64.nii")); }) ==
              ErrorCode::UnsupportedDatatype);
    }
    SUBCASE("4-D volume") {
        HeaderBuilder h = good;
        h.i16(40, 4);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("4d.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("4d.nii")); }) ==
              ErrorCode::UnsupportedFormat);
    }
    SUBCASE("vox_offset below 352") {
        HeaderBuilder h = good;
        h.f32(108, 300.0f);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("voxoff.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("voxoff.nii")); }) == ErrorCode::Format);
    }
    SUBCASE("zero pixdim") {
        HeaderBuilder h({2, 2, 2}, {0.0, 1, 1}, 2, 8);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("pixdim.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("pixdim.nii")); }) == ErrorCode::Format);
    }
    SUBCASE("non-finite payload") {
        HeaderBuilder h({1, 1, 1}, {1, 1, 1}, 16, 32);
        write_bytes(tmp.path("nan.nii"),
                    with_payload(h, {std::numeric_limits<float>::quiet_NaN()}));
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("nan.nii")); }) == ErrorCode::Format);
    }
    SUBCASE("oblique sform") {
        HeaderBuilder h({2, 2, 2}, {1, 1, 1}, 2, 8);
        const float m[3][4] = {{0.7f, 0.7f, 0, 0}, {-0.7f, 0.7f, 0, 0}, {0, 0, 1, 0}};
        h.set_sform(m);
        std::vector<unsigned char> file = h.bytes;
        file.resize(352 + 8, 0);
        write_bytes(tmp.path("oblique.nii"), file);
        CHECK(code_of([&] { niftiio::read_volume(tmp.path("oblique.nii")); }) == ErrorCode::Format);
    }
}

TEST_CASE("sform axis permutation reorients to canonical on read") {
    testsup::TempDir tmp("nifti_orient");
    // index axis 0 -> +z, axis 1 -> +y, axis 2 -> +x ("SAR")
    HeaderBuilder h({2, 1, 3}, {1, 1, 1}, 16, 32);
    const float m[3][4] = {{0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    h.set_sform(m);
    write_bytes(tmp.path("sar.nii"), with_payload(h, {0, 1, 2, 3, 4, 5}));

    const Volume v = niftiio::read_volume(tmp.path("sar.nii"));
    CHECK(v.dims() == Dims{3, 1, 2});
    CHECK(v.orientation().is_canonical());
    // source voxel (i,j,k) had value i + 2k; canonical (i',0,k') = source (k',0,i')
    for (std::int64_t kp = 0; kp < 2; ++kp)
        for (std::int64_t ip = 0; ip < 3; ++ip)
            CHECK(v.at(ip, 0, kp) == static_cast<double>(kp + 2 * ip));
}

TEST_CASE("labelmap round trip keeps labels exactly") {
    testsup::TempDir tmp("nifti_labels");
    std::vector<std::int32_t> labels;
    for (std::int32_t v = 0; v <= 12; ++v)
        for (int rep = 0; rep < 2; ++rep) labels.push_back(v);
    labels.resize(27, 0);
    const LabelMap m({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, labels);
    niftiio::write_labelmap(m, tmp.path("labels.nii"), Datatype::UInt8);
    const LabelMap r = niftiio::read_labelmap(tmp.path("labels.nii"));
    CHECK(std::equal(r.data().begin(), r.data().end(), labels.begin()));
    CHECK(r.present_labels() == m.present_labels());
}

TEST_CASE("lossy writes are rejected unless quantization is requested") {
    testsup::TempDir tmp("nifti_lossy");
    const Volume v({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, {300.5, 12.0});
    CHECK(code_of([&] { niftiio::write_volume(v, tmp.path("x.nii"), Datatype::Int16); }) ==
          ErrorCode::LossyWrite);
    CHECK_FALSE(std::filesystem::exists(tmp.path("x.nii")));

    niftiio::WriteOptions opts;
    opts.quantize = true;
    niftiio::write_volume(v, tmp.path("q.nii"), Datatype::Int16, opts);
    const Volume r = niftiio::read_volume(tmp.path("q.nii"));
    CHECK(r.data()[0] == doctest::Approx(300.5).epsilon(1e-3));
    CHECK(r.data()[1] == doctest::Approx(12.0).epsilon(1e-3));

    // uint8 range check on labels
    std::vector<std::int32_t> labels(8, 0);
    labels[0] = 300;
    CHECK_THROWS_AS(niftiio::write_labelmap(LabelMap({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, labels),
                                            tmp.path("l.nii"), Datatype::UInt8),
                    Error);
}

TEST_CASE("labelmap datatype restrictions") {
    testsup::TempDir tmp("nifti_labeldt");
    const LabelMap m({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {3});
    CHECK(code_of([&] { niftiio::write_labelmap(m, tmp.path("f.nii"), Datatype::Float32); }) ==
          ErrorCode::Argument);
    // reading a float volume as a labelmap is refused
    const Volume v({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {3.0});
    niftiio::write_volume(v, tmp.path("vol.nii"), Datatype::Float32);
    CHECK(code_of([&] { niftiio::read_labelmap(tmp.path("vol.nii")); }) ==
          ErrorCode::UnsupportedDatatype);
}

TEST_CASE("io failures leave no partial output behind") {
    testsup::TempDir tmp("nifti_io");
    const Volume v({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1.0});
    CHECK(code_of([&] { niftiio::write_volume(v, "", Datatype::Float32); }) == ErrorCode::Io);
    CHECK(code_of([&] {
              niftiio::write_volume(v, tmp.path("no_such_dir") / "x.nii", Datatype::Float32);
          }) == ErrorCode::Io);
    CHECK(code_of([&] { niftiio::read_volume(tmp.path("missing.nii")); }) == ErrorCode::Io);
    // the scratch dir must hold no stray temp files
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(tmp.dir())) ++entries;
    CHECK(entries == 0);
}
