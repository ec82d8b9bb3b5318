#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "jsonutil.hpp"

// Scan-manifest ingestion and the cohort distribution tables (age group,
// manufacturer, gender).
namespace spm::cohort {

using jsonutil::json;

enum class Sex { Male, Female, Unknown };

struct ScanRecord {
    std::string scan_id;
    int age = 0;  // years
    Sex sex = Sex::Unknown;
    std::string manufacturer;
};

struct RowError {
    std::size_t line;  // 1-based, header = line 1
    std::string message;
};

struct ManifestLoad {
    std::vector<ScanRecord> records;
    std::vector<RowError> errors;
};

// CSV with header scan_id,age,sex,manufacturer (quoted fields supported).
// Malformed rows and duplicate ids land in `errors`; valid rows are kept.
// A missing or wrong header is a format error.
ManifestLoad load_manifest(std::istream& in);
ManifestLoad load_manifest_file(const std::string& path);

// Age bins: Under 18 (<18), 18-40, 41-60, 61-75, Over 75 (>75); both named
// boundaries belong to the bin that names them.
extern const char* const kAgeBinNames[5];
int age_bin(int age);

struct Summary {
    std::array<std::int64_t, 5> age_counts{};
    // GE Healthcare, Siemens, Philips Healthcare, Other Manufacturers
    std::array<std::int64_t, 4> manufacturer_counts{};
    std::array<std::int64_t, 3> sex_counts{};  // male, female, unknown
    std::int64_t total = 0;

    json to_json() const;
};

Summary summarize(const std::vector<ScanRecord>& records);

// Fixed-width text in the three-table layout; byte-deterministic.
std::string render_tables(const Summary& s);

}  // namespace spm::cohort
