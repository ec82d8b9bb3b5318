#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace spm::evalkit {

using jsonutil::round6;
using volgrid::LabelScheme;

namespace {

void check_same_grid(const LabelMap& pred, const LabelMap& gt) {
    if (pred.dims() != gt.dims())
        fail(ErrorCode::Argument, "prediction and ground truth grids do not match");
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

// Dice prints like the clinical tables: two decimals with one trailing zero
// dropped (0.90 -> 0.9).
std::string fmt_dice(double v) {
    std::string s = fmt("%.2f", v);
    if (s.size() > 2 && s.back() == '0') s.pop_back();
    return s;
}

std::string fmt_pct(const std::optional<double>& v) { return v ? fmt("%.2f", *v) : "n/a"; }

std::string fmt_mse(double v) { return fmt("%.1f", v) + " mm^2"; }

}  // namespace

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
    check_same_grid(pred, gt);
    const auto p = pred.data();
    const auto g = gt.data();
    ConfusionCounts c;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool in_p = p[i] == label;
        const bool in_g = g[i] == label;
        if (in_p && in_g) ++c.tp;
        else if (in_p) ++c.fp;
        else if (in_g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double dice(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
    check_same_grid(pred, gt);
    const auto p = pred.data();
    const auto g = gt.data();
    std::int64_t np = 0, ng = 0, inter = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool in_p = p[i] == label;
        const bool in_g = g[i] == label;
        np += in_p;
        ng += in_g;
        inter += in_p && in_g;
    }
    if (np + ng == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

double dice_from_counts(const ConfusionCounts& c) {
    const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

PrecisionRecall precision_recall(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
    const ConfusionCounts c = confusion(pred, gt, label);
    PrecisionRecall pr;
    if (c.tp + c.fp > 0)
        pr.precision = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        pr.recall = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return pr;
}

double mse(std::span<const double> predicted, std::span<const double> expected) {
    if (predicted.empty() || predicted.size() != expected.size())
        fail(ErrorCode::Argument, "mse requires equal-length non-empty value lists");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - expected[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predicted.size());
}

double composite_loss(const std::vector<const Volume*>& prob_maps, const LabelMap& gt,
                      const LossWeights& weights) {
    if (prob_maps.empty())
        fail(ErrorCode::Argument, "composite loss requires at least one class probability map");
    if (!(weights.dice >= 0.0) || !(weights.cross_entropy >= 0.0) ||
        !std::isfinite(weights.dice) || !std::isfinite(weights.cross_entropy))
        fail(ErrorCode::Argument, "loss weights must be non-negative and finite");

    const std::size_t nvox = gt.voxel_count();
    const auto nclasses = prob_maps.size();
    for (const Volume* v : prob_maps)
        if (!v || v->dims() != gt.dims())
            fail(ErrorCode::Argument, "probability grids must match the ground-truth grid");
    const auto g = gt.data();
    for (std::int32_t v : g)
        if (static_cast<std::size_t>(v) >= nclasses)
            fail(ErrorCode::Argument,
                 "ground-truth label " + std::to_string(v) + " has no probability map");

    // validate probability mass per voxel
    for (std::size_t i = 0; i < nvox; ++i) {
        double sum = 0.0;
        for (const Volume* v : prob_maps) {
            const double p = v->data()[i];
            if (p < -1e-9 || p > 1.0 + 1e-9)
                fail(ErrorCode::Argument, "probabilities must lie in [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-5)
            fail(ErrorCode::Argument, "per-voxel probability mass must sum to 1");
    }

    constexpr double kSoftDiceEps = 1e-5;
    constexpr double kLogClamp = 1e-7;

    double dice_sum = 0.0;
    for (std::size_t c = 0; c < nclasses; ++c) {
        const auto p = prob_maps[c]->data();
        double sum_p = 0.0, sum_g = 0.0, sum_pg = 0.0;
        for (std::size_t i = 0; i < nvox; ++i) {
            const double gi = g[i] == static_cast<std::int32_t>(c) ? 1.0 : 0.0;
            sum_p += p[i];
            sum_g += gi;
            sum_pg += p[i] * gi;
        }
        dice_sum += (sum_p + sum_g > 0.0) ? 2.0 * sum_pg / (sum_p + sum_g + kSoftDiceEps) : 1.0;
    }
    const double mean_dice = dice_sum / static_cast<double>(nclasses);

    double ce_sum = 0.0;
    for (std::size_t i = 0; i < nvox; ++i) {
        const double p = prob_maps[static_cast<std::size_t>(g[i])]->data()[i];
        ce_sum += -std::log(std::clamp(p, kLogClamp, 1.0));
    }
    const double ce = ce_sum / static_cast<double>(nvox);

    return weights.dice * (1.0 - mean_dice) + weights.cross_entropy * ce;
}

std::string region_of_structure(const std::string& structure) {
    if (structure.empty()) return "Unknown";
    if (structure == "CANAL" || structure == "AP diameter") return "Spinal canal";
    switch (structure[0]) {
        case 'C': return "Cervical Spine";
        case 'D': return "Dorsal Spine";
        case 'L': return "Lumbar Spine";
        case 'S': return "Lumbar Spine";  // S1 only shows up in L5-S1 contexts
        default: return "Unknown";
    }
}

MetricsReport evaluate_labelmaps(const LabelMap& pred, const LabelMap& gt) {
    check_same_grid(pred, gt);
    const auto scheme = gt.scheme();

    // union of structures present on either side, scheme order, canal last
    std::map<std::int32_t, bool> labels;
    for (std::int32_t l : gt.present_labels()) labels[l] = true;
    for (std::int32_t l : pred.present_labels()) labels[l] = true;

    std::vector<std::int32_t> ordered;
    for (std::int32_t id : scheme->vertebrae_in_order())
        if (labels.count(id)) ordered.push_back(id);
    if (labels.count(scheme->canal_id())) ordered.push_back(scheme->canal_id());

    MetricsReport report;
    for (std::int32_t id : ordered) {
        const std::string name = scheme->name_of(id).value_or("label" + std::to_string(id));
        DiceRow row;
        row.structure = name == "CANAL" ? "canal" : name;
        row.region = region_of_structure(name);
        row.counts = confusion(pred, gt, id);
        row.value = dice(pred, gt, id);
        report.dice.push_back(std::move(row));
    }

    // segment rows: adjacent vertebra pairs measured voxelwise over the union
    // of the two vertebra masks
    const auto pair_counts = [&](std::int32_t a, std::int32_t b) {
        const auto p = pred.data();
        const auto g = gt.data();
        ConfusionCounts c;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const bool in_p = p[i] == a || p[i] == b;
            const bool in_g = g[i] == a || g[i] == b;
            if (in_p && in_g) ++c.tp;
            else if (in_p) ++c.fp;
            else if (in_g) ++c.fn;
            else ++c.tn;
        }
        return c;
    };
    for (const morpho::LevelPair& pair : morpho::pair_levels(gt)) {
        const auto a = scheme->id_of(pair.upper);
        const auto b = scheme->id_of(pair.lower);
        const ConfusionCounts c = pair_counts(*a, *b);
        PrRow row;
        row.segment = pair.name();
        row.region = region_of_structure(pair.upper);
        if (c.tp + c.fp > 0)
            row.precision = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        if (c.tp + c.fn > 0)
            row.recall = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        row.n_precision = row.precision ? 1 : 0;
        row.n_recall = row.recall ? 1 : 0;
        report.precision_recall.push_back(std::move(row));
    }
    if (labels.count(scheme->canal_id())) {
        const PrecisionRecall pr = precision_recall(pred, gt, scheme->canal_id());
        PrRow row;
        row.region = "Spinal canal";
        row.segment = "AP diameter";
        row.precision = pr.precision;
        row.recall = pr.recall;
        row.n_precision = pr.precision ? 1 : 0;
        row.n_recall = pr.recall ? 1 : 0;
        report.precision_recall.push_back(std::move(row));
    }

    report.notes = {
        "dice convention: empty prediction and empty truth score 1.0",
        "precision/recall are voxelwise; undefined denominators reported as n/a",
        "segment rows pool the two vertebra masks of each level",
    };
    return report;
}

void add_measurement_errors(MetricsReport& report, const morpho::MeasurementReport& predicted,
                            const morpho::MeasurementReport& expected) {
    std::map<std::string, const morpho::LevelMeasurement*> gt_levels;
    for (const auto& lm : expected.levels) gt_levels[lm.level] = &lm;

    std::vector<std::string> canal_levels;
    double canal_sum = 0.0;
    std::int64_t canal_n = 0;
    for (const auto& lm : predicted.levels) {
        auto it = gt_levels.find(lm.level);
        if (it == gt_levels.end()) continue;
        const morpho::LevelMeasurement& gt = *it->second;
        const std::string upper = lm.level.substr(0, lm.level.find('-'));
        if (lm.disc_height_mm && gt.disc_height_mm) {
            const double d = *lm.disc_height_mm - *gt.disc_height_mm;
            report.mse_disc_height.push_back({region_of_structure(upper), lm.level, d * d, 1});
        }
        if (lm.canal_ap_diameter_mm && gt.canal_ap_diameter_mm) {
            const double d = *lm.canal_ap_diameter_mm - *gt.canal_ap_diameter_mm;
            canal_sum += d * d;
            ++canal_n;
            canal_levels.push_back(lm.level);
        }
    }
    if (canal_n > 0) {
        const std::string span =
            canal_levels.front().substr(0, canal_levels.front().find('-')) + " - " +
            canal_levels.back().substr(canal_levels.back().find('-') + 1);
        report.mse_canal_ap.push_back(
            {"Spinal canal", "AP Diameter (" + span + ")", canal_sum, canal_n});
    }
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
    MetricsReport out;
    // keyed accumulators preserving first-seen order
    auto merge_dice = [&](const DiceRow& row) {
        for (DiceRow& existing : out.dice)
            if (existing.region == row.region && existing.structure == row.structure) {
                const double total = existing.value * static_cast<double>(existing.n_scans) +
                                     row.value * static_cast<double>(row.n_scans);
                existing.n_scans += row.n_scans;
                existing.value = total / static_cast<double>(existing.n_scans);
                existing.counts.reset();  // counts are per-scan only
                return;
            }
        DiceRow copy = row;
        copy.counts.reset();
        out.dice.push_back(copy);
    };
    auto merge_pr = [&](const PrRow& row) {
        for (PrRow& existing : out.precision_recall)
            if (existing.region == row.region && existing.segment == row.segment) {
                auto fold = [](std::optional<double>& acc, std::size_t& acc_n,
                               const std::optional<double>& v, std::size_t v_n) {
                    if (!v || v_n == 0) return;
                    if (!acc || acc_n == 0) {
                        acc = *v;
                        acc_n = v_n;
                        return;
                    }
                    const double total = *acc * static_cast<double>(acc_n) +
                                         *v * static_cast<double>(v_n);
                    acc_n += v_n;
                    acc = total / static_cast<double>(acc_n);
                };
                fold(existing.precision, existing.n_precision, row.precision, row.n_precision);
                fold(existing.recall, existing.n_recall, row.recall, row.n_recall);
                existing.n_scans += row.n_scans;
                return;
            }
        PrRow copy = row;
        if (!copy.precision) copy.n_precision = 0;
        if (!copy.recall) copy.n_recall = 0;
        out.precision_recall.push_back(copy);
    };
    auto merge_mse = [&](std::vector<MseRow>& dst, const MseRow& row) {
        for (MseRow& existing : dst)
            if (existing.region == row.region && existing.label == row.label) {
                existing.sum_squared_error += row.sum_squared_error;
                existing.n += row.n;
                return;
            }
        dst.push_back(row);
    };

    for (const MetricsReport& r : reports) {
        for (const auto& row : r.dice) merge_dice(row);
        for (const auto& row : r.precision_recall) merge_pr(row);
        for (const auto& row : r.mse_disc_height) merge_mse(out.mse_disc_height, row);
        for (const auto& row : r.mse_canal_ap) merge_mse(out.mse_canal_ap, row);
        for (const auto& note : r.notes)
            if (std::find(out.notes.begin(), out.notes.end(), note) == out.notes.end())
                out.notes.push_back(note);
    }
    const std::string agg_note = "aggregation: per-scan metrics averaged unweighted across scans";
    if (std::find(out.notes.begin(), out.notes.end(), agg_note) == out.notes.end())
        out.notes.push_back(agg_note);
    return out;
}

json MetricsReport::to_json() const {
    json jd = json::array();
    for (const DiceRow& r : dice) {
        json row{{"region", r.region},
                 {"structure", r.structure},
                 {"value", round6(r.value)},
                 {"n_scans", r.n_scans}};
        if (r.counts)
            row["counts"] = {{"tp", r.counts->tp}, {"fp", r.counts->fp},
                             {"fn", r.counts->fn}, {"tn", r.counts->tn}};
        jd.push_back(std::move(row));
    }
    json jp = json::array();
    for (const PrRow& r : precision_recall) {
        json row{{"region", r.region},
                 {"segment", r.segment},
                 {"n_scans", r.n_scans},
                 {"n_precision", r.precision ? r.n_precision : 0},
                 {"n_recall", r.recall ? r.n_recall : 0}};
        row["precision"] = r.precision ? json(round6(*r.precision)) : json(nullptr);
        row["recall"] = r.recall ? json(round6(*r.recall)) : json(nullptr);
        jp.push_back(std::move(row));
    }
    auto mse_rows = [](const std::vector<MseRow>& rows, const char* label_key) {
        json out = json::array();
        for (const MseRow& r : rows)
            out.push_back({{"region", r.region},
                           {label_key, r.label},
                           {"sum_squared_error", round6(r.sum_squared_error)},
                           {"n", r.n},
                           {"mse_mm2", round6(r.mse())}});
        return out;
    };
    return json{{"dice", jd},
                {"precision_recall", jp},
                {"mse_disc_height_mm2", mse_rows(mse_disc_height, "level")},
                {"mse_canal_ap_mm2", mse_rows(mse_canal_ap, "measurement")},
                {"notes", notes}};
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport report;
    const char* what = "metrics report";
    for (const json& row : jsonutil::require(j, "dice", what)) {
        DiceRow r;
        r.region = jsonutil::require_string(row, "region", what);
        r.structure = jsonutil::require_string(row, "structure", what);
        r.value = jsonutil::require_number(row, "value", what);
        r.n_scans = row.value("n_scans", std::size_t{1});
        if (row.contains("counts")) {
            ConfusionCounts c;
            c.tp = row["counts"].value("tp", std::int64_t{0});
            c.fp = row["counts"].value("fp", std::int64_t{0});
            c.fn = row["counts"].value("fn", std::int64_t{0});
            c.tn = row["counts"].value("tn", std::int64_t{0});
            r.counts = c;
        }
        report.dice.push_back(std::move(r));
    }
    for (const json& row : jsonutil::require(j, "precision_recall", what)) {
        PrRow r;
        r.region = jsonutil::require_string(row, "region", what);
        r.segment = jsonutil::require_string(row, "segment", what);
        r.n_scans = row.value("n_scans", std::size_t{1});
        if (row.contains("precision") && !row["precision"].is_null())
            r.precision = row["precision"].get<double>();
        if (row.contains("recall") && !row["recall"].is_null())
            r.recall = row["recall"].get<double>();
        r.n_precision = row.value("n_precision", r.precision ? std::size_t{1} : std::size_t{0});
        r.n_recall = row.value("n_recall", r.recall ? std::size_t{1} : std::size_t{0});
        report.precision_recall.push_back(std::move(r));
    }
    auto parse_mse = [&](const char* key, const char* label_key, std::vector<MseRow>& dst) {
        if (!j.contains(key)) return;
        for (const json& row : j[key]) {
            MseRow r;
            r.region = jsonutil::require_string(row, "region", what);
            r.label = jsonutil::require_string(row, label_key, what);
            r.sum_squared_error = jsonutil::require_number(row, "sum_squared_error", what);
            r.n = jsonutil::require(row, "n", what).get<std::int64_t>();
            dst.push_back(std::move(r));
        }
    };
    parse_mse("mse_disc_height_mm2", "level", report.mse_disc_height);
    parse_mse("mse_canal_ap_mm2", "measurement", report.mse_canal_ap);
    if (j.contains("notes"))
        for (const json& n : j["notes"]) report.notes.push_back(n.get<std::string>());
    return report;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
    std::string out = s;
    while (out.size() < width) out += ' ';
    return out;
}

std::string render_table_text(const MetricsReport& r) {
    std::string out;

    out += "Dice Coefficient Measurement\n";
    out += pad("Region", 16) + pad("Vertebra", 12) + "Dice Coefficient\n";
    std::string last_region;
    for (const DiceRow& row : r.dice) {
        const std::string region = row.region == last_region ? "" : row.region;
        last_region = row.region;
        const std::string structure = row.structure == "canal" ? "-" : row.structure;
        const std::string shown_region = row.structure == "canal" ? "Spinal canal" : region;
        out += pad(shown_region, 16) + pad(structure, 12) + fmt_dice(row.value) + "\n";
    }
    out += "\n";

    out += "MSE values\n";
    out += pad("Region", 16) + pad("Vertebra", 24) + "MSE (Disc Height)\n";
    last_region.clear();
    for (const MseRow& row : r.mse_disc_height) {
        const std::string region = row.region == last_region ? "" : row.region;
        last_region = row.region;
        out += pad(region, 16) + pad(row.label, 24) + fmt_mse(row.mse()) + "\n";
    }
    if (!r.mse_canal_ap.empty()) {
        out += pad("Region", 16) + pad("Measurement", 24) + "MSE\n";
        last_region.clear();
        for (const MseRow& row : r.mse_canal_ap) {
            const std::string region = row.region == last_region ? "" : row.region;
            last_region = row.region;
            out += pad(region, 16) + pad(row.label, 24) + fmt_mse(row.mse()) + "\n";
        }
    }
    out += "\n";

    out += "Performance Metrics\n";
    out += pad("Spine", 16) + pad("Segment", 12) + pad("Precision (%)", 15) + "Recall (%)\n";
    last_region.clear();
    for (const PrRow& row : r.precision_recall) {
        if (row.region != last_region) {
            out += row.region + "\n";
            last_region = row.region;
        }
        out += pad("", 16) + pad(row.segment, 12) + pad(fmt_pct(row.precision), 15) +
               fmt_pct(row.recall) + "\n";
    }

    if (!r.notes.empty()) {
        out += "\nNotes:\n";
        for (const std::string& n : r.notes) out += "  - " + n + "\n";
    }
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string render_csv(const MetricsReport& r) {
    std::string out = "section,region,label,metric,value\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    for (const DiceRow& row : r.dice)
        out += "dice," + csv_escape(row.region) + "," + csv_escape(row.structure) + ",dice," +
               num(row.value) + "\n";
    for (const PrRow& row : r.precision_recall) {
        out += "precision_recall," + csv_escape(row.region) + "," + csv_escape(row.segment) +
               ",precision_pct," + (row.precision ? num(*row.precision) : "") + "\n";
        out += "precision_recall," + csv_escape(row.region) + "," + csv_escape(row.segment) +
               ",recall_pct," + (row.recall ? num(*row.recall) : "") + "\n";
    }
    for (const MseRow& row : r.mse_disc_height)
        out += "mse_disc_height," + csv_escape(row.region) + "," + csv_escape(row.label) +
               ",mse_mm2," + num(row.mse()) + "\n";
    for (const MseRow& row : r.mse_canal_ap)
        out += "mse_canal_ap," + csv_escape(row.region) + "," + csv_escape(row.label) +
               ",mse_mm2," + num(row.mse()) + "\n";
    return out;
}

}  // namespace

std::string MetricsReport::render(ReportFormat format) const {
    switch (format) {
        case ReportFormat::TableText: return render_table_text(*this);
        case ReportFormat::Json: return jsonutil::dump_canonical(to_json());
        case ReportFormat::Csv: return render_csv(*this);
    }
    fail(ErrorCode::Argument, "unknown report format");
}

}  // namespace spm::evalkit
