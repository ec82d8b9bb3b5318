#include "cohort.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "errors.hpp"

namespace spm::cohort {

const char* const kAgeBinNames[5] = {"Under 18", "18-40", "41-60", "61-75", "Over 75"};

namespace {

// Minimal CSV row reader: commas split fields, double quotes group them,
// "" inside quotes is a literal quote. Handles \r\n line ends.
bool read_row(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += static_cast<char>(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += static_cast<char>(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

ManifestLoad load_manifest(std::istream& in) {
    std::vector<std::string> fields;
    if (!read_row(in, fields))
        fail(ErrorCode::Format, "manifest is empty (expected header scan_id,age,sex,manufacturer)");
    std::vector<std::string> header;
    for (const std::string& f : fields) header.push_back(lower(trim(f)));
    const std::vector<std::string> expected = {"scan_id", "age", "sex", "manufacturer"};
    if (header != expected)
        fail(ErrorCode::Format, "manifest header must be scan_id,age,sex,manufacturer");

    ManifestLoad out;
    std::unordered_set<std::string> seen_ids;
    std::size_t line = 1;
    while (read_row(in, fields)) {
        ++line;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
        if (fields.size() != 4) {
            out.errors.push_back({line, "expected 4 fields, got " + std::to_string(fields.size())});
            continue;
        }
        ScanRecord rec;
        rec.scan_id = trim(fields[0]);
        if (rec.scan_id.empty()) {
            out.errors.push_back({line, "empty scan_id"});
            continue;
        }
        const std::string age_text = trim(fields[1]);
        try {
            std::size_t pos = 0;
            rec.age = std::stoi(age_text, &pos);
            if (pos != age_text.size() || rec.age < 0) throw std::invalid_argument("age");
        } catch (const std::exception&) {
            out.errors.push_back({line, "invalid age '" + age_text + "'"});
            continue;
        }
        const std::string sex_text = lower(trim(fields[2]));
        if (sex_text == "m" || sex_text == "male") {
            rec.sex = Sex::Male;
        } else if (sex_text == "f" || sex_text == "female") {
            rec.sex = Sex::Female;
        } else if (sex_text.empty() || sex_text == "u" || sex_text == "unknown") {
            rec.sex = Sex::Unknown;
        } else {
            out.errors.push_back({line, "invalid sex '" + trim(fields[2]) + "'"});
            continue;
        }
        rec.manufacturer = trim(fields[3]);
        if (!seen_ids.insert(rec.scan_id).second) {
            out.errors.push_back({line, "duplicate scan_id '" + rec.scan_id + "'"});
            continue;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

ManifestLoad load_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::Io, "cannot open manifest " + path);
    return load_manifest(in);
}

int age_bin(int age) {
    if (age < 18) return 0;
    if (age <= 40) return 1;
    if (age <= 60) return 2;
    if (age <= 75) return 3;
    return 4;
}

Summary summarize(const std::vector<ScanRecord>& records) {
    Summary s;
    for (const ScanRecord& r : records) {
        ++s.total;
        ++s.age_counts[static_cast<std::size_t>(age_bin(r.age))];
        const std::string m = lower(r.manufacturer);
        if (m == "ge healthcare") ++s.manufacturer_counts[0];
        else if (m == "siemens") ++s.manufacturer_counts[1];
        else if (m == "philips healthcare") ++s.manufacturer_counts[2];
        else ++s.manufacturer_counts[3];
        ++s.sex_counts[static_cast<std::size_t>(r.sex)];
    }
    return s;
}

json Summary::to_json() const {
    json age = json::object();
    for (int b = 0; b < 5; ++b) age[kAgeBinNames[b]] = age_counts[static_cast<std::size_t>(b)];
    return json{
        {"age_groups", age},
        {"manufacturers",
         {{"GE Healthcare", manufacturer_counts[0]},
          {"Siemens", manufacturer_counts[1]},
          {"Philips Healthcare", manufacturer_counts[2]},
          {"Other Manufacturers", manufacturer_counts[3]}}},
        {"gender", {{"Male", sex_counts[0]}, {"Female", sex_counts[1]}, {"Unknown", sex_counts[2]}}},
        {"total", total},
    };
}

namespace {

std::string thousands(std::int64_t v) {
    std::string digits = std::to_string(v);
    std::string out;
    int count = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (count > 0 && count % 3 == 0) out += ',';
        out += *it;
        ++count;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string pad(const std::string& s, std::size_t width) {
    std::string out = s;
    while (out.size() < width) out += ' ';
    return out;
}

}  // namespace

std::string render_tables(const Summary& s) {
    std::string out;
    out += "Scans distribution based on Age Group\n";
    out += pad("Age Group", 22) + "Number of Scans\n";
    for (int b = 0; b < 5; ++b)
        out += pad(kAgeBinNames[b], 22) + thousands(s.age_counts[static_cast<std::size_t>(b)]) + "\n";
    out += pad("Total", 22) + thousands(s.total) + "\n\n";

    out += "Scans distribution based on Manufacturer Type\n";
    out += pad("Manufacturer", 22) + "Number of Scans\n";
    const char* manufacturers[4] = {"GE Healthcare", "Siemens", "Philips Healthcare",
                                    "Other Manufacturers"};
    for (int m = 0; m < 4; ++m)
        out += pad(manufacturers[m], 22) + thousands(s.manufacturer_counts[static_cast<std::size_t>(m)]) + "\n";
    out += pad("Total", 22) + thousands(s.total) + "\n\n";

    out += "Scans distribution based on Gender Distribution\n";
    out += pad("Gender", 22) + "Number of Scans\n";
    out += pad("Male", 22) + thousands(s.sex_counts[0]) + "\n";
    out += pad("Female", 22) + thousands(s.sex_counts[1]) + "\n";
    if (s.sex_counts[2] > 0) out += pad("Unknown", 22) + thousands(s.sex_counts[2]) + "\n";
    out += pad("Total", 22) + thousands(s.total) + "\n";
    return out;
}

}  // namespace spm::cohort
