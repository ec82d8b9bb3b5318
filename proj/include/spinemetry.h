/* spinemetry — spinal MRI morphometry toolkit, public C API.
 *
 * The library is a C++ core exported through this C surface: opaque handles,
 * integer status codes, and JSON strings for structured data. All functions
 * returning spm_status use SPM_OK (0) for success; on failure the thread's
 * last error message is available via spm_last_error_message().
 *
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with spm_string_free(). Handles are released with their
 * matching *_free() function. All operations are pure and thread-safe; it is
 * fine to process many volumes from different threads concurrently.
 *
 * Volumes are 3-D scalar grids in canonical RAS orientation (+x right,
 * +y anterior, +z superior), voxel data linear with x fastest and z slowest.
 * Files use a NIfTI-1 single-file subset: little-endian ".nii", magic "n+1",
 * datatypes uint8 (2), int16 (4), float32 (16).
 */

#ifndef SPINEMETRY_H
#define SPINEMETRY_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spm_status {
    SPM_OK = 0,
    SPM_ERR_ARGUMENT = 1,             /* bad parameter or precondition */
    SPM_ERR_BOUNDS = 2,               /* index outside the grid */
    SPM_ERR_FORMAT = 3,               /* malformed input */
    SPM_ERR_BAD_MAGIC = 4,            /* not a NIfTI-1 file */
    SPM_ERR_UNSUPPORTED_FORMAT = 5,   /* NIfTI outside the supported subset */
    SPM_ERR_UNSUPPORTED_DATATYPE = 6, /* datatype not in {2, 4, 16} */
    SPM_ERR_TRUNCATED = 7,            /* file shorter than promised */
    SPM_ERR_BYTE_ORDER = 8,           /* big-endian file */
    SPM_ERR_LOSSY_WRITE = 9,          /* values do not fit the datatype */
    SPM_ERR_IO = 10,                  /* filesystem failure */
    SPM_ERR_INSUFFICIENT_OVERLAP = 11,/* too few columns for a disc height */
    SPM_ERR_INCONSISTENT_LABELS = 12, /* interpenetrating vertebrae */
    SPM_ERR_NO_CANAL_AT_LEVEL = 13,   /* no canal voxels in the slice */
    SPM_ERR_LABELING = 14,            /* wrong component count in baseline seg */
    SPM_ERR_DUPLICATE_ID = 15,        /* repeated scan_id */
    SPM_ERR_INTERNAL = 16
} spm_status;

/* Stable name for a status code ("argument", "bad-magic", ...). */
const char* spm_status_name(spm_status status);

/* Message for the most recent failure on this thread; empty string if none. */
const char* spm_last_error_message(void);

/* Library version, e.g. "1.0.0". */
const char* spm_version(void);

void spm_string_free(char* s);

/* ---- volumes and label maps ------------------------------------------- */

typedef struct spm_volume spm_volume;
typedef struct spm_labelmap spm_labelmap;

/* data is length dims[0]*dims[1]*dims[2], x fastest. axcodes names the
 * orientation of the passed data ("RAS", "LPI", ...); the stored volume is
 * reoriented to canonical RAS. Pass "RAS" (or NULL) for already-canonical
 * data. */
spm_status spm_volume_create(const int64_t dims[3], const double spacing[3],
                             const double origin[3], const double* data,
                             const char* axcodes, spm_volume** out);
spm_status spm_labelmap_create(const int64_t dims[3], const double spacing[3],
                               const double origin[3], const int32_t* labels,
                               const char* axcodes, spm_labelmap** out);
void spm_volume_free(spm_volume* v);
void spm_labelmap_free(spm_labelmap* m);

spm_status spm_volume_dims(const spm_volume* v, int64_t dims[3]);
spm_status spm_volume_spacing(const spm_volume* v, double spacing[3]);
spm_status spm_volume_origin(const spm_volume* v, double origin[3]);
/* Copies voxel data into buf (capacity voxels); fails on size mismatch. */
spm_status spm_volume_read_data(const spm_volume* v, double* buf, size_t capacity);

spm_status spm_labelmap_dims(const spm_labelmap* m, int64_t dims[3]);
spm_status spm_labelmap_spacing(const spm_labelmap* m, double spacing[3]);
spm_status spm_labelmap_origin(const spm_labelmap* m, double origin[3]);
spm_status spm_labelmap_read_data(const spm_labelmap* m, int32_t* buf, size_t capacity);

/* index (i,j,k) -> world mm, and the continuous inverse. */
spm_status spm_voxel_to_world(const spm_volume* v, const int64_t index[3], double world[3]);
spm_status spm_world_to_voxel(const spm_volume* v, const double world[3], double voxel[3]);

/* Label scheme (id <-> structure name table) as a JSON document. */
spm_status spm_label_scheme_json(char** out);

/* ---- NIfTI-1 subset I/O ------------------------------------------------ */

/* datatype: 2 = uint8, 4 = int16, 16 = float32 (NIfTI codes). */
spm_status spm_read_volume(const char* path, spm_volume** out);
spm_status spm_read_labelmap(const char* path, spm_labelmap** out);
/* quantize != 0 permits lossy integer writes via scl_slope/scl_inter. */
spm_status spm_write_volume(const spm_volume* v, const char* path, int datatype, int quantize);
spm_status spm_write_labelmap(const spm_labelmap* m, const char* path, int datatype);

/* ---- preprocessing ------------------------------------------------------ */

spm_status spm_resample_volume(const spm_volume* v, const double target_spacing[3],
                               spm_volume** out);
spm_status spm_resample_labelmap(const spm_labelmap* m, const double target_spacing[3],
                                 spm_labelmap** out);
/* mask may be NULL (whole-volume statistics). degenerate becomes nonzero when
 * the region std fell below 1e-8 and the output was zero-filled. */
spm_status spm_zscore(const spm_volume* v, const spm_labelmap* mask, spm_volume** out,
                      int* degenerate);
spm_status spm_window(const spm_volume* v, double window_width, double window_center,
                      spm_volume** out);

/* ---- planning ----------------------------------------------------------- */

/* masks may be NULL; otherwise it must hold n entries matching volumes. */
spm_status spm_fingerprint(const spm_volume* const* volumes, size_t n,
                           const spm_labelmap* const* masks, char** fingerprint_json);
spm_status spm_make_plan(const char* fingerprint_json, char** plan_json);

/* ---- post-processing ---------------------------------------------------- */

spm_status spm_component_table(const spm_labelmap* m, int connectivity, char** table_json);
spm_status spm_filter_small(const spm_labelmap* m, int64_t min_voxels, int connectivity,
                            spm_labelmap** out);
spm_status spm_largest_component(const spm_labelmap* m, int32_t label, int connectivity,
                                 spm_labelmap** out);

/* ---- measurement -------------------------------------------------------- */

/* min_columns <= 0 selects the default (10). */
spm_status spm_measure(const spm_labelmap* m, int min_columns, char** report_json);
spm_status spm_measurement_csv(const char* report_json, char** csv);

/* ---- evaluation --------------------------------------------------------- */

spm_status spm_dice(const spm_labelmap* pred, const spm_labelmap* gt, int32_t label,
                    double* out);
/* Per-structure dice and per-segment precision/recall; the measurement report
 * JSONs are optional (NULL) and add disc-height/canal MSE sections. */
spm_status spm_evaluate(const spm_labelmap* pred, const spm_labelmap* gt,
                        const char* pred_measurements_json, const char* gt_measurements_json,
                        char** metrics_json);
spm_status spm_metrics_aggregate(const char* const* metrics_jsons, size_t n, char** out);
/* format: "table-text", "json" or "csv". */
spm_status spm_render_report(const char* metrics_json, const char* format, char** out);
spm_status spm_mse(const double* predicted, const double* expected, size_t n, double* out);
/* prob_maps holds one grid per class value (background first), class-major. */
spm_status spm_composite_loss(const spm_volume* const* prob_maps, size_t n_classes,
                              const spm_labelmap* gt, double weight_dice, double weight_ce,
                              double* out);

/* ---- phantoms ----------------------------------------------------------- */

spm_status spm_phantom_generate(const char* spec_json, spm_volume** image,
                                spm_labelmap** gt_labels, char** gt_measurements_json);
/* config NULL derives the thresholds and vertebra list from spec_json, which
 * may itself be NULL only when config is given. */
spm_status spm_segment_baseline(const spm_volume* v, const char* config_json,
                                const char* spec_json, spm_labelmap** out);
spm_status spm_baseline_config_from_spec(const char* spec_json, char** config_json);

/* ---- cohort ------------------------------------------------------------- */

/* Summarizes a manifest CSV; tables_json carries the three distribution
 * tables plus row-level errors, tables_text the fixed-width rendering. Either
 * out-parameter may be NULL. */
spm_status spm_cohort_summarize(const char* manifest_path, char** tables_json,
                                char** tables_text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPINEMETRY_H */
