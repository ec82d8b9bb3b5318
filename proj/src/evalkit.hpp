#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jsonutil.hpp"
#include "morpho.hpp"
#include "volgrid.hpp"

// Evaluation: Dice, voxelwise precision/recall, measurement MSE, the
// composite Dice+CE loss as a computable score, and report rendering in the
// region/vertebra/value table layouts used throughout.
namespace spm::evalkit {

using jsonutil::json;
using volgrid::LabelMap;
using volgrid::Volume;

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
};

// Voxelwise counts for one structure; grids must match.
ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt, std::int32_t label);

// 2|P∩G| / (|P|+|G|); both masks empty counts as perfect agreement (1.0).
double dice(const LabelMap& pred, const LabelMap& gt, std::int32_t label);
double dice_from_counts(const ConfusionCounts& c);

struct PrecisionRecall {
    std::optional<double> precision;  // percent; empty when TP+FP = 0
    std::optional<double> recall;     // percent; empty when TP+FN = 0
};
PrecisionRecall precision_recall(const LabelMap& pred, const LabelMap& gt, std::int32_t label);

// Mean squared difference, equal-length non-empty inputs.
double mse(std::span<const double> predicted, std::span<const double> expected);

struct LossWeights {
    double dice = 0.7;
    double cross_entropy = 0.3;
};

// prob_maps[c] is the probability grid for class value c (background included)
// on the gt grid. Probabilities must lie in [0,1] and sum to 1 (+-1e-5) per
// voxel. Soft-dice smoothing eps = 1e-5; log probabilities clamped at 1e-7.
// Classes empty in both prediction and truth count as dice 1.
double composite_loss(const std::vector<const Volume*>& prob_maps, const LabelMap& gt,
                      const LossWeights& weights = {});

enum class ReportFormat { TableText, Json, Csv };

struct DiceRow {
    std::string region;
    std::string structure;
    double value = 0.0;
    std::size_t n_scans = 1;
    std::optional<ConfusionCounts> counts;
};

struct PrRow {
    std::string region;
    std::string segment;
    std::optional<double> precision;  // mean over scans where it was defined
    std::optional<double> recall;
    std::size_t n_scans = 1;
    std::size_t n_precision = 1;  // defined-entry counts backing the means
    std::size_t n_recall = 1;
};

// Squared errors are kept as (sum, count) so per-scan reports pool exactly
// into per-level MSE across a run.
struct MseRow {
    std::string region;
    std::string label;
    double sum_squared_error = 0.0;
    std::int64_t n = 0;

    double mse() const { return n > 0 ? sum_squared_error / static_cast<double>(n) : 0.0; }
};

struct MetricsReport {
    std::vector<DiceRow> dice;
    std::vector<PrRow> precision_recall;
    std::vector<MseRow> mse_disc_height;  // label = level name
    std::vector<MseRow> mse_canal_ap;     // label = measurement description
    std::vector<std::string> notes;

    json to_json() const;
    static MetricsReport from_json(const json& j);
    std::string render(ReportFormat format) const;
};

// Per-structure Dice plus per-segment (adjacent vertebra pair, voxelwise over
// the pair's union) precision/recall, canal included.
MetricsReport evaluate_labelmaps(const LabelMap& pred, const LabelMap& gt);

// Adds measurement squared errors for levels present in both reports.
void add_measurement_errors(MetricsReport& report, const morpho::MeasurementReport& predicted,
                            const morpho::MeasurementReport& expected);

// Unweighted per-scan averaging for dice and precision/recall; exact pooling
// for squared errors.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

// Region grouping used by the report tables ("Cervical Spine", ...).
std::string region_of_structure(const std::string& structure);

}  // namespace spm::evalkit
