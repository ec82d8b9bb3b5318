#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "volgrid.hpp"

// Reader/writer for a documented NIfTI-1 single-file subset:
//   - single ".nii", uncompressed, little-endian, magic "n+1"
//   - 348-byte header + 4 zero extension bytes, payload at vox_offset >= 352
//   - dim[0] = 3, datatype in {2 uint8, 4 int16, 16 float32}
//   - scl_slope/scl_inter applied on read (slope 0 treated as 1)
//   - origin and orientation from the sform when sform_code > 0, else the
//     origin is (0,0,0) and the orientation is assumed canonical; only
//     axis-aligned sforms are accepted, oblique ones are rejected
// Volumes come back reoriented to canonical RAS. Writes are atomic
// (temp file + rename) and canonical: writing what was read reproduces the
// file byte for byte.
namespace spm::niftiio {

using volgrid::LabelMap;
using volgrid::LabelScheme;
using volgrid::Volume;

enum class Datatype : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Float32 = 16,
};

Volume read_volume(const std::filesystem::path& path);

// Integer datatypes only; labels must exist in the scheme.
LabelMap read_labelmap(const std::filesystem::path& path,
                       std::shared_ptr<const LabelScheme> scheme = LabelScheme::default_scheme());

struct WriteOptions {
    // For integer datatypes: quantize out-of-range or fractional intensities
    // through scl_slope/scl_inter instead of failing with LossyWrite.
    bool quantize = false;
};

void write_volume(const Volume& v, const std::filesystem::path& path, Datatype datatype,
                  const WriteOptions& options = {});

void write_labelmap(const LabelMap& m, const std::filesystem::path& path,
                    Datatype datatype = Datatype::UInt8);

}  // namespace spm::niftiio
