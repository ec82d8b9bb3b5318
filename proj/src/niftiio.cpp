#include "niftiio.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace spm::niftiio {

namespace fs = std::filesystem;
using volgrid::Dims;
using volgrid::Orientation;
using volgrid::Vec3;

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;  // header + 4 extension bytes

// Byte offsets of the NIfTI-1 header fields we use.
enum : std::size_t {
    OFF_SIZEOF_HDR = 0,
    OFF_DIM = 40,        // short dim[8]
    OFF_DATATYPE = 70,   // short
    OFF_BITPIX = 72,     // short
    OFF_PIXDIM = 76,     // float pixdim[8]
    OFF_VOX_OFFSET = 108,
    OFF_SCL_SLOPE = 112,
    OFF_SCL_INTER = 116,
    OFF_DESCRIP = 148,   // char[80]
    OFF_QFORM_CODE = 252,
    OFF_SFORM_CODE = 254,
    OFF_SROW_X = 280,    // float[4]
    OFF_SROW_Y = 296,
    OFF_SROW_Z = 312,
    OFF_MAGIC = 344,     // char[4]
};

// All multi-byte header fields are little-endian on disk, independent of the
// host, so encode/decode goes through explicit byte shuffling.

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::int16_t get_i16(const unsigned char* p) { return static_cast<std::int16_t>(get_u16(p)); }
std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::int32_t get_i32(const unsigned char* p) { return static_cast<std::int32_t>(get_u32(p)); }
float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
}
void put_i16(unsigned char* p, std::int16_t v) { put_u16(p, static_cast<std::uint16_t>(v)); }
void put_u32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}
void put_i32(unsigned char* p, std::int32_t v) { put_u32(p, static_cast<std::uint32_t>(v)); }
void put_f32(unsigned char* p, float v) { put_u32(p, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0x000000ffu) << 24) | ((v & 0x0000ff00u) << 8) | ((v & 0x00ff0000u) >> 8) |
           ((v & 0xff000000u) >> 24);
}

int bytes_per_voxel(Datatype dt) {
    switch (dt) {
        case Datatype::UInt8: return 1;
        case Datatype::Int16: return 2;
        case Datatype::Float32: return 4;
    }
    return 0;
}

struct ParsedHeader {
    Dims dims;
    Vec3 spacing;
    Vec3 origin;
    Orientation orientation;
    Datatype datatype;
    double scl_slope;
    double scl_inter;
    std::size_t vox_offset;
};

ParsedHeader parse_header(const unsigned char* h, const fs::path& path) {
    const std::int32_t sizeof_hdr = get_i32(h + OFF_SIZEOF_HDR);
    if (sizeof_hdr != 348) {
        if (bswap32(static_cast<std::uint32_t>(sizeof_hdr)) == 348u)
            fail(ErrorCode::ByteOrder,
                 path.string() + ": big-endian NIfTI-1 not supported (little-endian only)");
        fail(ErrorCode::BadMagic, path.string() + ": not a NIfTI-1 file (sizeof_hdr != 348)");
    }

    const char* magic = reinterpret_cast<const char*>(h + OFF_MAGIC);
    if (std::memcmp(magic, "n+1\0", 4) != 0) {
        if (std::memcmp(magic, "ni1\0", 4) == 0)
            fail(ErrorCode::UnsupportedFormat,
                 path.string() + ": two-file NIfTI (magic \"ni1\") not supported");
        fail(ErrorCode::BadMagic, path.string() + ": bad magic (expected \"n+1\")");
    }

    const std::int16_t ndim = get_i16(h + OFF_DIM);
    if (ndim != 3)
        fail(ErrorCode::UnsupportedFormat,
             path.string() + ": only 3-D volumes supported (dim[0] = " + std::to_string(ndim) + ")");

    ParsedHeader out{};
    std::size_t nvox = 1;
    for (int a = 0; a < 3; ++a) {
        const std::int16_t d = get_i16(h + OFF_DIM + 2 * (a + 1));
        if (d < 1)
            fail(ErrorCode::Format, path.string() + ": non-positive dim[" + std::to_string(a + 1) + "]");
        out.dims[a] = d;
        nvox *= static_cast<std::size_t>(d);
        const float pd = get_f32(h + OFF_PIXDIM + 4 * (a + 1));
        if (!(pd > 0.0f) || !std::isfinite(pd))
            fail(ErrorCode::Format,
                 path.string() + ": non-positive pixdim[" + std::to_string(a + 1) + "]");
        out.spacing[a] = static_cast<double>(pd);
    }
    if (nvox > (std::size_t{1} << 31))
        fail(ErrorCode::Format, path.string() + ": voxel count implausibly large");

    const std::int16_t dt = get_i16(h + OFF_DATATYPE);
    if (dt != 2 && dt != 4 && dt != 16)
        fail(ErrorCode::UnsupportedDatatype,
             path.string() + ": unsupported datatype code " + std::to_string(dt) +
                 " (supported: 2 uint8, 4 int16, 16 float32)");
    out.datatype = static_cast<Datatype>(dt);

    const std::int16_t bitpix = get_i16(h + OFF_BITPIX);
    if (bitpix != 8 * bytes_per_voxel(out.datatype))
        fail(ErrorCode::Format, path.string() + ": bitpix " + std::to_string(bitpix) +
                                    " does not match datatype");

    const float vox_offset = get_f32(h + OFF_VOX_OFFSET);
    if (!(vox_offset >= static_cast<float>(kVoxOffset)) ||
        vox_offset != std::floor(vox_offset))
        fail(ErrorCode::Format, path.string() + ": invalid vox_offset");
    out.vox_offset = static_cast<std::size_t>(vox_offset);

    float slope = get_f32(h + OFF_SCL_SLOPE);
    float inter = get_f32(h + OFF_SCL_INTER);
    if (!std::isfinite(slope) || !std::isfinite(inter))
        fail(ErrorCode::Format, path.string() + ": non-finite scl_slope/scl_inter");
    out.scl_slope = (slope == 0.0f) ? 1.0 : static_cast<double>(slope);
    out.scl_inter = static_cast<double>(inter);

    const std::int16_t sform_code = get_i16(h + OFF_SFORM_CODE);
    if (sform_code > 0) {
        double m[3][3];
        double t[3];
        const std::size_t rows[3] = {OFF_SROW_X, OFF_SROW_Y, OFF_SROW_Z};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] = static_cast<double>(get_f32(h + rows[r] + 4 * c));
            t[r] = static_cast<double>(get_f32(h + rows[r] + 12));
            if (!std::isfinite(t[r]))
                fail(ErrorCode::Format, path.string() + ": non-finite sform translation");
        }
        // Each index axis must map onto exactly one world axis. Anything
        // oblique is outside the subset and rejected rather than resampled.
        std::array<volgrid::AxisCode, 3> codes{};
        for (int c = 0; c < 3; ++c) {
            int dominant = -1;
            double best = 0.0;
            for (int r = 0; r < 3; ++r) {
                const double a = std::abs(m[r][c]);
                if (a > best) {
                    best = a;
                    dominant = r;
                }
            }
            if (dominant < 0 || best <= 0.0)
                fail(ErrorCode::Format, path.string() + ": degenerate sform column");
            for (int r = 0; r < 3; ++r)
                if (r != dominant && std::abs(m[r][c]) > 1e-4 * best)
                    fail(ErrorCode::Format,
                         path.string() + ": oblique orientation not supported");
            const bool positive = m[dominant][c] > 0.0;
            static constexpr volgrid::AxisCode pos[3] = {volgrid::AxisCode::R, volgrid::AxisCode::A,
                                                         volgrid::AxisCode::S};
            static constexpr volgrid::AxisCode neg[3] = {volgrid::AxisCode::L, volgrid::AxisCode::P,
                                                         volgrid::AxisCode::I};
            codes[c] = positive ? pos[dominant] : neg[dominant];
        }
        try {
            out.orientation = Orientation(codes);
        } catch (const Error&) {
            fail(ErrorCode::Format, path.string() + ": sform maps two axes onto one world axis");
        }
        out.origin = {t[0], t[1], t[2]};
    } else {
        out.orientation = Orientation::canonical();
        out.origin = {0.0, 0.0, 0.0};
    }
    return out;
}

std::vector<unsigned char> read_file_prefix(const fs::path& path, std::size_t offset,
                                            std::size_t count, std::ifstream& in) {
    in.seekg(static_cast<std::streamoff>(offset), std::ios::beg);
    std::vector<unsigned char> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        fail(ErrorCode::Truncated, path.string() + ": file truncated");
    return buf;
}

struct RawFile {
    ParsedHeader header;
    std::vector<unsigned char> payload;
};

RawFile read_raw(const fs::path& path) {
    if (path.empty())
        fail(ErrorCode::Io, "empty path");
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<unsigned char> hdr(kHeaderSize);
    in.read(reinterpret_cast<char*>(hdr.data()), static_cast<std::streamsize>(kHeaderSize));
    if (static_cast<std::size_t>(in.gcount()) != kHeaderSize)
        fail(ErrorCode::Truncated, path.string() + ": file shorter than the 348-byte header");
    RawFile raw;
    raw.header = parse_header(hdr.data(), path);
    const std::size_t nvox = static_cast<std::size_t>(raw.header.dims[0]) *
                             static_cast<std::size_t>(raw.header.dims[1]) *
                             static_cast<std::size_t>(raw.header.dims[2]);
    raw.payload = read_file_prefix(path, raw.header.vox_offset,
                                   nvox * bytes_per_voxel(raw.header.datatype), in);
    return raw;
}

double decode_voxel(const unsigned char* p, Datatype dt) {
    switch (dt) {
        case Datatype::UInt8: return static_cast<double>(*p);
        case Datatype::Int16: return static_cast<double>(get_i16(p));
        case Datatype::Float32: return static_cast<double>(get_f32(p));
    }
    return 0.0;
}

// Shared temp-name counter so parallel writers never collide.
std::atomic<std::uint64_t> g_tmp_counter{0};

class AtomicFileWriter {
public:
    explicit AtomicFileWriter(const fs::path& path) : final_path_(path) {
        if (path.empty())
            fail(ErrorCode::Io, "empty path");
        tmp_path_ = path;
        tmp_path_ += ".tmp" + std::to_string(g_tmp_counter.fetch_add(1));
        out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
        if (!out_)
            fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    }

    ~AtomicFileWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            fs::remove(tmp_path_, ec);
        }
    }

    void write(const unsigned char* data, std::size_t count) {
        out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count));
    }

    void commit() {
        out_.flush();
        if (!out_)
            fail(ErrorCode::Io, "write failed for " + final_path_.string());
        out_.close();
        std::error_code ec;
        fs::rename(tmp_path_, final_path_, ec);
        if (ec) {
            fs::remove(tmp_path_, ec);
            fail(ErrorCode::Io, "cannot move output into place at " + final_path_.string());
        }
        committed_ = true;
    }

private:
    fs::path final_path_;
    fs::path tmp_path_;
    std::ofstream out_;
    bool committed_ = false;
};

std::vector<unsigned char> build_header(const volgrid::GridGeometry& g, Datatype dt,
                                        double scl_slope, double scl_inter) {
    std::vector<unsigned char> h(kHeaderSize, 0);
    put_i32(h.data() + OFF_SIZEOF_HDR, 348);
    put_i16(h.data() + OFF_DIM, 3);
    for (int a = 0; a < 3; ++a) put_i16(h.data() + OFF_DIM + 2 * (a + 1), static_cast<std::int16_t>(g.dims[a]));
    for (int a = 4; a <= 7; ++a) put_i16(h.data() + OFF_DIM + 2 * a, 1);
    put_i16(h.data() + OFF_DATATYPE, static_cast<std::int16_t>(dt));
    put_i16(h.data() + OFF_BITPIX, static_cast<std::int16_t>(8 * bytes_per_voxel(dt)));
    put_f32(h.data() + OFF_PIXDIM, 1.0f);  // qfac, unused (qform_code = 0)
    for (int a = 0; a < 3; ++a)
        put_f32(h.data() + OFF_PIXDIM + 4 * (a + 1), static_cast<float>(g.spacing[a]));
    put_f32(h.data() + OFF_VOX_OFFSET, static_cast<float>(kVoxOffset));
    put_f32(h.data() + OFF_SCL_SLOPE, static_cast<float>(scl_slope));
    put_f32(h.data() + OFF_SCL_INTER, static_cast<float>(scl_inter));
    static const char descrip[] = "spinemetry";
    std::memcpy(h.data() + OFF_DESCRIP, descrip, sizeof(descrip));
    put_i16(h.data() + OFF_QFORM_CODE, 0);
    put_i16(h.data() + OFF_SFORM_CODE, 1);
    // sform: signed permutation scaled by spacing, translation = origin
    float m[3][4] = {};
    for (int a = 0; a < 3; ++a) {
        const int w = g.orientation.world_axis(a);
        m[w][a] = static_cast<float>(g.orientation.sign(a) * g.spacing[a]);
    }
    for (int w = 0; w < 3; ++w) m[w][3] = static_cast<float>(g.origin[w]);
    const std::size_t rows[3] = {OFF_SROW_X, OFF_SROW_Y, OFF_SROW_Z};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) put_f32(h.data() + rows[r] + 4 * c, m[r][c]);
    std::memcpy(h.data() + OFF_MAGIC, "n+1\0", 4);
    return h;
}

void check_dims_fit_int16(const Dims& dims) {
    for (int a = 0; a < 3; ++a)
        if (dims[a] > std::numeric_limits<std::int16_t>::max())
            fail(ErrorCode::Argument, "dims exceed the int16 range of NIfTI-1 dim fields");
}

void write_file(const fs::path& path, const volgrid::GridGeometry& g, Datatype dt,
                double scl_slope, double scl_inter,
                const std::vector<unsigned char>& payload) {
    const std::vector<unsigned char> header = build_header(g, dt, scl_slope, scl_inter);
    const unsigned char extension[4] = {0, 0, 0, 0};
    AtomicFileWriter writer(path);
    writer.write(header.data(), header.size());
    writer.write(extension, 4);
    writer.write(payload.data(), payload.size());
    writer.commit();
}

void encode_raw(std::vector<unsigned char>& payload, std::size_t i, Datatype dt, double raw) {
    switch (dt) {
        case Datatype::UInt8:
            payload[i] = static_cast<unsigned char>(raw);
            break;
        case Datatype::Int16:
            put_i16(payload.data() + 2 * i, static_cast<std::int16_t>(raw));
            break;
        case Datatype::Float32:
            put_f32(payload.data() + 4 * i, static_cast<float>(raw));
            break;
    }
}

void datatype_range(Datatype dt, double& lo, double& hi) {
    switch (dt) {
        case Datatype::UInt8: lo = 0.0; hi = 255.0; break;
        case Datatype::Int16: lo = -32768.0; hi = 32767.0; break;
        case Datatype::Float32: lo = -std::numeric_limits<double>::infinity();
                                hi = std::numeric_limits<double>::infinity(); break;
    }
}

}  // namespace

Volume read_volume(const fs::path& path) {
    RawFile raw = read_raw(path);
    const ParsedHeader& h = raw.header;
    const std::size_t nvox = raw.payload.size() / bytes_per_voxel(h.datatype);
    std::vector<double> data(nvox);
    const int bpp = bytes_per_voxel(h.datatype);
    for (std::size_t i = 0; i < nvox; ++i) {
        const double v = h.scl_slope * decode_voxel(raw.payload.data() + i * bpp, h.datatype) +
                         h.scl_inter;
        if (!std::isfinite(v))
            fail(ErrorCode::Format, path.string() + ": non-finite intensity at voxel " +
                                        std::to_string(i));
        data[i] = v;
    }
    Volume v(h.dims, h.spacing, h.origin, std::move(data), h.orientation);
    return volgrid::reorient_to_canonical(v);
}

LabelMap read_labelmap(const fs::path& path, std::shared_ptr<const LabelScheme> scheme) {
    RawFile raw = read_raw(path);
    const ParsedHeader& h = raw.header;
    if (h.datatype == Datatype::Float32)
        fail(ErrorCode::UnsupportedDatatype,
             path.string() + ": label maps require an integer datatype");
    if (h.scl_slope != 1.0 || h.scl_inter != 0.0)
        fail(ErrorCode::Format, path.string() + ": scaled label data not supported");
    const int bpp = bytes_per_voxel(h.datatype);
    const std::size_t nvox = raw.payload.size() / bpp;
    std::vector<std::int32_t> labels(nvox);
    for (std::size_t i = 0; i < nvox; ++i) {
        const double v = decode_voxel(raw.payload.data() + i * bpp, h.datatype);
        if (v < 0)
            fail(ErrorCode::Format, path.string() + ": negative label value");
        labels[i] = static_cast<std::int32_t>(v);
    }
    LabelMap m(h.dims, h.spacing, h.origin, std::move(labels), std::move(scheme), h.orientation);
    return volgrid::reorient_to_canonical(m);
}

void write_volume(const Volume& v, const fs::path& path, Datatype datatype,
                  const WriteOptions& options) {
    check_dims_fit_int16(v.dims());
    const auto data = v.data();
    std::vector<unsigned char> payload(data.size() * bytes_per_voxel(datatype));
    double slope = 1.0, inter = 0.0;

    if (datatype == Datatype::Float32) {
        for (std::size_t i = 0; i < data.size(); ++i) encode_raw(payload, i, datatype, data[i]);
    } else {
        double lo, hi;
        datatype_range(datatype, lo, hi);
        bool lossless = true;
        for (double x : data) {
            if (x != std::nearbyint(x) || x < lo || x > hi) {
                lossless = false;
                break;
            }
        }
        if (lossless) {
            for (std::size_t i = 0; i < data.size(); ++i) encode_raw(payload, i, datatype, data[i]);
        } else if (!options.quantize) {
            fail(ErrorCode::LossyWrite,
                 "intensities not representable as " +
                     std::string(datatype == Datatype::UInt8 ? "uint8" : "int16") +
                     "; request quantization to write with scl_slope/scl_inter");
        } else {
            double vmin = data[0], vmax = data[0];
            for (double x : data) {
                vmin = std::min(vmin, x);
                vmax = std::max(vmax, x);
            }
            if (vmax > vmin) {
                slope = (vmax - vmin) / (hi - lo);
                inter = vmin - lo * slope;
            } else {
                slope = 1.0;
                inter = vmin;
            }
            // quantized values observe float32 header fields, so round-trips
            // reproduce slope*raw + inter exactly as the reader computes it
            slope = static_cast<double>(static_cast<float>(slope));
            inter = static_cast<double>(static_cast<float>(inter));
            for (std::size_t i = 0; i < data.size(); ++i) {
                double raw = std::nearbyint((data[i] - inter) / slope);
                raw = std::clamp(raw, lo, hi);
                encode_raw(payload, i, datatype, raw);
            }
        }
    }
    write_file(path, v.geometry(), datatype, slope, inter, payload);
}

void write_labelmap(const LabelMap& m, const fs::path& path, Datatype datatype) {
    check_dims_fit_int16(m.dims());
    if (datatype == Datatype::Float32)
        fail(ErrorCode::Argument, "label maps require an integer datatype");
    double lo, hi;
    datatype_range(datatype, lo, hi);
    const auto labels = m.data();
    for (std::int32_t v : labels)
        if (v < lo || v > hi)
            fail(ErrorCode::LossyWrite, "label " + std::to_string(v) +
                                            " does not fit the requested datatype");
    std::vector<unsigned char> payload(labels.size() * bytes_per_voxel(datatype));
    for (std::size_t i = 0; i < labels.size(); ++i)
        encode_raw(payload, i, datatype, static_cast<double>(labels[i]));
    write_file(path, m.geometry(), datatype, 1.0, 0.0, payload);
}

}  // namespace spm::niftiio
