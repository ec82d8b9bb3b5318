// extern "C" surface over the C++ core. Exceptions stop here: every entry
// point traps spm::Error into a status code and stashes the message in a
// thread-local slot for spm_last_error_message().

#include "spinemetry.h"

#include <cstring>
#include <string>

#include "autoplan.hpp"
#include "cohort.hpp"
#include "errors.hpp"
#include "evalkit.hpp"
#include "jsonutil.hpp"
#include "morpho.hpp"
#include "niftiio.hpp"
#include "phantom.hpp"
#include "postseg.hpp"
#include "prep.hpp"
#include "volgrid.hpp"

using spm::Error;
using spm::ErrorCode;
using spm::jsonutil::json;

struct spm_volume {
    spm::volgrid::Volume v;
};

struct spm_labelmap {
    spm::volgrid::LabelMap m;
};

namespace {

thread_local std::string t_last_error;

spm_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::Argument: return SPM_ERR_ARGUMENT;
        case ErrorCode::Bounds: return SPM_ERR_BOUNDS;
        case ErrorCode::Format: return SPM_ERR_FORMAT;
        case ErrorCode::BadMagic: return SPM_ERR_BAD_MAGIC;
        case ErrorCode::UnsupportedFormat: return SPM_ERR_UNSUPPORTED_FORMAT;
        case ErrorCode::UnsupportedDatatype: return SPM_ERR_UNSUPPORTED_DATATYPE;
        case ErrorCode::Truncated: return SPM_ERR_TRUNCATED;
        case ErrorCode::ByteOrder: return SPM_ERR_BYTE_ORDER;
        case ErrorCode::LossyWrite: return SPM_ERR_LOSSY_WRITE;
        case ErrorCode::Io: return SPM_ERR_IO;
        case ErrorCode::InsufficientOverlap: return SPM_ERR_INSUFFICIENT_OVERLAP;
        case ErrorCode::InconsistentLabels: return SPM_ERR_INCONSISTENT_LABELS;
        case ErrorCode::NoCanalAtLevel: return SPM_ERR_NO_CANAL_AT_LEVEL;
        case ErrorCode::Labeling: return SPM_ERR_LABELING;
        case ErrorCode::DuplicateId: return SPM_ERR_DUPLICATE_ID;
    }
    return SPM_ERR_INTERNAL;
}

template <typename Fn>
spm_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return SPM_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return SPM_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool ok, const char* message) {
    if (!ok) spm::fail(ErrorCode::Argument, message);
}

spm::volgrid::Orientation parse_axcodes(const char* axcodes) {
    if (!axcodes || !*axcodes) return spm::volgrid::Orientation::canonical();
    return spm::volgrid::Orientation::parse(axcodes);
}

spm::niftiio::Datatype parse_datatype(int datatype) {
    switch (datatype) {
        case 2: return spm::niftiio::Datatype::UInt8;
        case 4: return spm::niftiio::Datatype::Int16;
        case 16: return spm::niftiio::Datatype::Float32;
        default:
            spm::fail(ErrorCode::Argument,
                      "datatype must be 2 (uint8), 4 (int16) or 16 (float32)");
    }
}

template <typename Handle, typename Get, typename Out>
spm_status copy3(const Handle* h, Get get, Out* out) {
    return guarded([&] {
        require(h && out, "null argument");
        const auto& value = get(*h);
        for (int a = 0; a < 3; ++a) out[a] = value[a];
    });
}

}  // namespace

extern "C" {

const char* spm_status_name(spm_status status) {
    switch (status) {
        case SPM_OK: return "ok";
        case SPM_ERR_ARGUMENT: return "argument";
        case SPM_ERR_BOUNDS: return "bounds";
        case SPM_ERR_FORMAT: return "format";
        case SPM_ERR_BAD_MAGIC: return "bad-magic";
        case SPM_ERR_UNSUPPORTED_FORMAT: return "unsupported-format";
        case SPM_ERR_UNSUPPORTED_DATATYPE: return "unsupported-datatype";
        case SPM_ERR_TRUNCATED: return "truncated";
        case SPM_ERR_BYTE_ORDER: return "byte-order";
        case SPM_ERR_LOSSY_WRITE: return "lossy-write";
        case SPM_ERR_IO: return "io";
        case SPM_ERR_INSUFFICIENT_OVERLAP: return "insufficient-overlap";
        case SPM_ERR_INCONSISTENT_LABELS: return "inconsistent-segmentation";
        case SPM_ERR_NO_CANAL_AT_LEVEL: return "no-canal-at-level";
        case SPM_ERR_LABELING: return "labeling";
        case SPM_ERR_DUPLICATE_ID: return "duplicate-id";
        case SPM_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* spm_last_error_message(void) { return t_last_error.c_str(); }

const char* spm_version(void) { return "1.0.0"; }

void spm_string_free(char* s) { delete[] s; }

spm_status spm_volume_create(const int64_t dims[3], const double spacing[3],
                             const double origin[3], const double* data, const char* axcodes,
                             spm_volume** out) {
    return guarded([&] {
        require(dims && spacing && origin && data && out, "null argument");
        spm::volgrid::Dims d{dims[0], dims[1], dims[2]};
        const std::size_t n = static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
                              static_cast<std::size_t>(d[2]);
        spm::volgrid::Volume v(d, {spacing[0], spacing[1], spacing[2]},
                               {origin[0], origin[1], origin[2]},
                               std::vector<double>(data, data + n), parse_axcodes(axcodes));
        *out = new spm_volume{spm::volgrid::reorient_to_canonical(v)};
    });
}

spm_status spm_labelmap_create(const int64_t dims[3], const double spacing[3],
                               const double origin[3], const int32_t* labels,
                               const char* axcodes, spm_labelmap** out) {
    return guarded([&] {
        require(dims && spacing && origin && labels && out, "null argument");
        spm::volgrid::Dims d{dims[0], dims[1], dims[2]};
        const std::size_t n = static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
                              static_cast<std::size_t>(d[2]);
        spm::volgrid::LabelMap m(d, {spacing[0], spacing[1], spacing[2]},
                                 {origin[0], origin[1], origin[2]},
                                 std::vector<std::int32_t>(labels, labels + n),
                                 spm::volgrid::LabelScheme::default_scheme(),
                                 parse_axcodes(axcodes));
        *out = new spm_labelmap{spm::volgrid::reorient_to_canonical(m)};
    });
}

void spm_volume_free(spm_volume* v) { delete v; }
void spm_labelmap_free(spm_labelmap* m) { delete m; }

spm_status spm_volume_dims(const spm_volume* v, int64_t dims[3]) {
    return copy3(v, [](const spm_volume& h) -> const auto& { return h.v.dims(); }, dims);
}
spm_status spm_volume_spacing(const spm_volume* v, double spacing[3]) {
    return copy3(v, [](const spm_volume& h) -> const auto& { return h.v.spacing(); }, spacing);
}
spm_status spm_volume_origin(const spm_volume* v, double origin[3]) {
    return copy3(v, [](const spm_volume& h) -> const auto& { return h.v.origin(); }, origin);
}

spm_status spm_volume_read_data(const spm_volume* v, double* buf, size_t capacity) {
    return guarded([&] {
        require(v && buf, "null argument");
        require(capacity == v->v.voxel_count(), "buffer capacity does not match voxel count");
        std::memcpy(buf, v->v.data().data(), capacity * sizeof(double));
    });
}

spm_status spm_labelmap_dims(const spm_labelmap* m, int64_t dims[3]) {
    return copy3(m, [](const spm_labelmap& h) -> const auto& { return h.m.dims(); }, dims);
}
spm_status spm_labelmap_spacing(const spm_labelmap* m, double spacing[3]) {
    return copy3(m, [](const spm_labelmap& h) -> const auto& { return h.m.spacing(); }, spacing);
}
spm_status spm_labelmap_origin(const spm_labelmap* m, double origin[3]) {
    return copy3(m, [](const spm_labelmap& h) -> const auto& { return h.m.origin(); }, origin);
}

spm_status spm_labelmap_read_data(const spm_labelmap* m, int32_t* buf, size_t capacity) {
    return guarded([&] {
        require(m && buf, "null argument");
        require(capacity == m->m.voxel_count(), "buffer capacity does not match voxel count");
        std::memcpy(buf, m->m.data().data(), capacity * sizeof(int32_t));
    });
}

spm_status spm_voxel_to_world(const spm_volume* v, const int64_t index[3], double world[3]) {
    return guarded([&] {
        require(v && index && world, "null argument");
        const auto w = spm::volgrid::voxel_to_world(v->v, {index[0], index[1], index[2]});
        for (int a = 0; a < 3; ++a) world[a] = w[a];
    });
}

spm_status spm_world_to_voxel(const spm_volume* v, const double world[3], double voxel[3]) {
    return guarded([&] {
        require(v && world && voxel, "null argument");
        const auto u = spm::volgrid::world_to_voxel(v->v, {world[0], world[1], world[2]});
        for (int a = 0; a < 3; ++a) voxel[a] = u[a];
    });
}

spm_status spm_label_scheme_json(char** out) {
    return guarded([&] {
        require(out, "null argument");
        const auto scheme = spm::volgrid::LabelScheme::default_scheme();
        json entries = json::array();
        for (const auto& e : scheme->entries())
            entries.push_back({{"id", e.id}, {"name", e.name}});
        json j{{"background", 0}, {"entries", entries}};
        *out = dup_string(spm::jsonutil::dump_canonical(j));
    });
}

spm_status spm_read_volume(const char* path, spm_volume** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new spm_volume{spm::niftiio::read_volume(path)};
    });
}

spm_status spm_read_labelmap(const char* path, spm_labelmap** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new spm_labelmap{spm::niftiio::read_labelmap(path)};
    });
}

spm_status spm_write_volume(const spm_volume* v, const char* path, int datatype, int quantize) {
    return guarded([&] {
        require(v && path, "null argument");
        spm::niftiio::WriteOptions options;
        options.quantize = quantize != 0;
        spm::niftiio::write_volume(v->v, path, parse_datatype(datatype), options);
    });
}

spm_status spm_write_labelmap(const spm_labelmap* m, const char* path, int datatype) {
    return guarded([&] {
        require(m && path, "null argument");
        spm::niftiio::write_labelmap(m->m, path, parse_datatype(datatype));
    });
}

spm_status spm_resample_volume(const spm_volume* v, const double target_spacing[3],
                               spm_volume** out) {
    return guarded([&] {
        require(v && target_spacing && out, "null argument");
        *out = new spm_volume{spm::prep::resample(
            v->v, {target_spacing[0], target_spacing[1], target_spacing[2]})};
    });
}

spm_status spm_resample_labelmap(const spm_labelmap* m, const double target_spacing[3],
                                 spm_labelmap** out) {
    return guarded([&] {
        require(m && target_spacing && out, "null argument");
        *out = new spm_labelmap{spm::prep::resample(
            m->m, {target_spacing[0], target_spacing[1], target_spacing[2]})};
    });
}

spm_status spm_zscore(const spm_volume* v, const spm_labelmap* mask, spm_volume** out,
                      int* degenerate) {
    return guarded([&] {
        require(v && out, "null argument");
        auto result = spm::prep::zscore(v->v, mask ? &mask->m : nullptr);
        if (degenerate) *degenerate = result.degenerate_std ? 1 : 0;
        *out = new spm_volume{std::move(result.volume)};
    });
}

spm_status spm_window(const spm_volume* v, double window_width, double window_center,
                      spm_volume** out) {
    return guarded([&] {
        require(v && out, "null argument");
        *out = new spm_volume{spm::prep::window(v->v, {window_width, window_center})};
    });
}

spm_status spm_fingerprint(const spm_volume* const* volumes, size_t n,
                           const spm_labelmap* const* masks, char** fingerprint_json) {
    return guarded([&] {
        require(volumes && fingerprint_json, "null argument");
        std::vector<const spm::volgrid::Volume*> vols;
        std::vector<const spm::volgrid::LabelMap*> ms;
        for (size_t i = 0; i < n; ++i) {
            require(volumes[i] != nullptr, "null volume handle");
            vols.push_back(&volumes[i]->v);
        }
        if (masks) {
            for (size_t i = 0; i < n; ++i) {
                require(masks[i] != nullptr, "null mask handle");
                ms.push_back(&masks[i]->m);
            }
        }
        const auto fp = spm::autoplan::fingerprint(vols, ms);
        *fingerprint_json = dup_string(spm::jsonutil::dump_canonical(fp.to_json()));
    });
}

spm_status spm_make_plan(const char* fingerprint_json, char** plan_json) {
    return guarded([&] {
        require(fingerprint_json && plan_json, "null argument");
        const auto fp = spm::autoplan::DatasetFingerprint::from_json(
            spm::jsonutil::parse(fingerprint_json, "fingerprint"));
        const auto plan = spm::autoplan::make_plan(fp);
        *plan_json = dup_string(spm::jsonutil::dump_canonical(plan.to_json()));
    });
}

spm_status spm_component_table(const spm_labelmap* m, int connectivity, char** table_json) {
    return guarded([&] {
        require(m && table_json, "null argument");
        const auto analysis = spm::postseg::cc_label(m->m, connectivity);
        *table_json =
            dup_string(spm::jsonutil::dump_canonical(spm::postseg::component_table_json(analysis)));
    });
}

spm_status spm_filter_small(const spm_labelmap* m, int64_t min_voxels, int connectivity,
                            spm_labelmap** out) {
    return guarded([&] {
        require(m && out, "null argument");
        *out = new spm_labelmap{spm::postseg::filter_small(m->m, min_voxels, connectivity)};
    });
}

spm_status spm_largest_component(const spm_labelmap* m, int32_t label, int connectivity,
                                 spm_labelmap** out) {
    return guarded([&] {
        require(m && out, "null argument");
        *out = new spm_labelmap{spm::postseg::largest_component(m->m, label, connectivity)};
    });
}

spm_status spm_measure(const spm_labelmap* m, int min_columns, char** report_json) {
    return guarded([&] {
        require(m && report_json, "null argument");
        spm::morpho::MeasureOptions opts;
        if (min_columns > 0) opts.min_columns = min_columns;
        const auto report = spm::morpho::measure_all(m->m, opts);
        *report_json = dup_string(spm::jsonutil::dump_canonical(report.to_json()));
    });
}

spm_status spm_measurement_csv(const char* report_json, char** csv) {
    return guarded([&] {
        require(report_json && csv, "null argument");
        const auto report = spm::morpho::MeasurementReport::from_json(
            spm::jsonutil::parse(report_json, "measurement report"));
        *csv = dup_string(report.to_csv());
    });
}

spm_status spm_dice(const spm_labelmap* pred, const spm_labelmap* gt, int32_t label,
                    double* out) {
    return guarded([&] {
        require(pred && gt && out, "null argument");
        *out = spm::evalkit::dice(pred->m, gt->m, label);
    });
}

spm_status spm_evaluate(const spm_labelmap* pred, const spm_labelmap* gt,
                        const char* pred_measurements_json, const char* gt_measurements_json,
                        char** metrics_json) {
    return guarded([&] {
        require(pred && gt && metrics_json, "null argument");
        require((pred_measurements_json == nullptr) == (gt_measurements_json == nullptr),
                "measurement reports must be passed for both prediction and ground truth");
        auto metrics = spm::evalkit::evaluate_labelmaps(pred->m, gt->m);
        if (pred_measurements_json) {
            const auto pm = spm::morpho::MeasurementReport::from_json(
                spm::jsonutil::parse(pred_measurements_json, "predicted measurements"));
            const auto gm = spm::morpho::MeasurementReport::from_json(
                spm::jsonutil::parse(gt_measurements_json, "expected measurements"));
            spm::evalkit::add_measurement_errors(metrics, pm, gm);
        }
        *metrics_json = dup_string(spm::jsonutil::dump_canonical(metrics.to_json()));
    });
}

spm_status spm_metrics_aggregate(const char* const* metrics_jsons, size_t n, char** out) {
    return guarded([&] {
        require(metrics_jsons && out, "null argument");
        std::vector<spm::evalkit::MetricsReport> reports;
        for (size_t i = 0; i < n; ++i) {
            require(metrics_jsons[i] != nullptr, "null metrics document");
            reports.push_back(spm::evalkit::MetricsReport::from_json(
                spm::jsonutil::parse(metrics_jsons[i], "metrics report")));
        }
        const auto merged = spm::evalkit::aggregate(reports);
        *out = dup_string(spm::jsonutil::dump_canonical(merged.to_json()));
    });
}

spm_status spm_render_report(const char* metrics_json, const char* format, char** out) {
    return guarded([&] {
        require(metrics_json && format && out, "null argument");
        const auto report = spm::evalkit::MetricsReport::from_json(
            spm::jsonutil::parse(metrics_json, "metrics report"));
        const std::string f = format;
        spm::evalkit::ReportFormat rf;
        if (f == "table-text") rf = spm::evalkit::ReportFormat::TableText;
        else if (f == "json") rf = spm::evalkit::ReportFormat::Json;
        else if (f == "csv") rf = spm::evalkit::ReportFormat::Csv;
        else spm::fail(ErrorCode::Argument, "format must be table-text, json or csv");
        *out = dup_string(report.render(rf));
    });
}

spm_status spm_mse(const double* predicted, const double* expected, size_t n, double* out) {
    return guarded([&] {
        require(predicted && expected && out, "null argument");
        *out = spm::evalkit::mse({predicted, n}, {expected, n});
    });
}

spm_status spm_composite_loss(const spm_volume* const* prob_maps, size_t n_classes,
                              const spm_labelmap* gt, double weight_dice, double weight_ce,
                              double* out) {
    return guarded([&] {
        require(prob_maps && gt && out, "null argument");
        std::vector<const spm::volgrid::Volume*> maps;
        for (size_t i = 0; i < n_classes; ++i) {
            require(prob_maps[i] != nullptr, "null probability map");
            maps.push_back(&prob_maps[i]->v);
        }
        *out = spm::evalkit::composite_loss(maps, gt->m, {weight_dice, weight_ce});
    });
}

spm_status spm_phantom_generate(const char* spec_json, spm_volume** image,
                                spm_labelmap** gt_labels, char** gt_measurements_json) {
    return guarded([&] {
        require(spec_json, "null argument");
        const auto spec =
            spm::phantom::PhantomSpec::from_json(spm::jsonutil::parse(spec_json, "phantom spec"));
        auto generated = spm::phantom::generate(spec);
        if (gt_measurements_json)
            *gt_measurements_json =
                dup_string(spm::jsonutil::dump_canonical(generated.truth.measurements.to_json()));
        if (gt_labels) *gt_labels = new spm_labelmap{std::move(generated.truth.labels)};
        if (image) *image = new spm_volume{std::move(generated.image)};
    });
}

spm_status spm_segment_baseline(const spm_volume* v, const char* config_json,
                                const char* spec_json, spm_labelmap** out) {
    return guarded([&] {
        require(v && out, "null argument");
        require(config_json || spec_json, "need a baseline config or a phantom spec");
        spm::phantom::BaselineConfig cfg;
        if (config_json) {
            cfg = spm::phantom::BaselineConfig::from_json(
                spm::jsonutil::parse(config_json, "baseline config"));
        } else {
            cfg = spm::phantom::BaselineConfig::from_phantom_spec(spm::phantom::PhantomSpec::from_json(
                spm::jsonutil::parse(spec_json, "phantom spec")));
        }
        *out = new spm_labelmap{spm::phantom::segment_baseline(v->v, cfg)};
    });
}

spm_status spm_baseline_config_from_spec(const char* spec_json, char** config_json) {
    return guarded([&] {
        require(spec_json && config_json, "null argument");
        const auto cfg = spm::phantom::BaselineConfig::from_phantom_spec(
            spm::phantom::PhantomSpec::from_json(spm::jsonutil::parse(spec_json, "phantom spec")));
        *config_json = dup_string(spm::jsonutil::dump_canonical(cfg.to_json()));
    });
}

spm_status spm_cohort_summarize(const char* manifest_path, char** tables_json,
                                char** tables_text) {
    return guarded([&] {
        require(manifest_path, "null argument");
        const auto load = spm::cohort::load_manifest_file(manifest_path);
        const auto summary = spm::cohort::summarize(load.records);
        if (tables_json) {
            json j = summary.to_json();
            json errors = json::array();
            for (const auto& e : load.errors)
                errors.push_back({{"line", e.line}, {"message", e.message}});
            j["row_errors"] = errors;
            j["valid_records"] = load.records.size();
            *tables_json = dup_string(spm::jsonutil::dump_canonical(j));
        }
        if (tables_text) *tables_text = dup_string(spm::cohort::render_tables(summary));
    });
}

}  // extern "C"
