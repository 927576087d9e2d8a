#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifetest/core/types.hpp"
#include "lifetest/forest/grid_search.hpp"
#include "lifetest/numerics/grid.hpp"
#include "lifetest/numerics/metrics.hpp"

namespace lifetest::pcdp {

using numerics::GridSpec;

// ---------------------------------------------------------------------------
// Performance-characterization-data prediction: reconstruct the full EIS from
// four probe impedances at two preset frequencies, predict the standardized
// I-V/CV/LSV curves from the reconstructed EIS, and predict aging indicators
// from the curves.
// ---------------------------------------------------------------------------

struct PresetSelectionConfig {
    double f_min = 1.0;      // Hz; analysis band lower edge
    double f_split = 100.0;  // Hz; medium/high boundary
    double f_max = 1e4;      // Hz; band upper edge
    bool log_frequency = true;  // cluster on log10(f) rather than raw f
    bool zscore_re = true;      // z-score the Re coordinate per curve
    std::uint64_t seed = 0;
};

struct FrequencyVote {
    double f_medium = 0.0;
    double f_high = 0.0;
    int count = 0;
};

struct PresetFrequencies {
    double f_medium = 0.0;
    double f_high = 0.0;
    std::vector<FrequencyVote> votes;  // descending by count
};

/// Per training curve: restrict to [f_min, f_max], 2-means the
/// (log10 f, z-scored Re) points, average the raw frequencies of each
/// cluster and snap each mean to the nearest measured frequency inside its
/// band. The modal (medium, high) pair across curves wins; ties prefer the
/// lower medium frequency. Raises InsufficientRange when a curve has no
/// points in one of the bands.
PresetFrequencies select_preset_frequencies(const std::vector<EisSpectrum>& training_curves,
                                            const PresetSelectionConfig& config = {});

/// The four probe impedances at the two preset frequencies.
struct ProbeVector {
    double re_medium = 0.0;
    double im_medium = 0.0;
    double re_high = 0.0;
    double im_high = 0.0;

    Eigen::Vector4d to_vector() const { return {re_medium, im_medium, re_high, im_high}; }
};

/// Looks up the stored impedances at both preset frequencies (relative
/// frequency tolerance 1e-6). Raises FrequencyMissing.
ProbeVector probe_impedances(const EisSpectrum& eis, const PresetFrequencies& preset);

enum class PcdKind { EIS, IV, CV, LSV };
const char* pcd_kind_name(PcdKind kind);

/// Per-output forests behind one multi-output regression model.
struct MultiForestModel {
    int n_inputs = 0;
    std::vector<forest::Forest> forests;  // one per output

    Eigen::VectorXd predict(const Eigen::VectorXd& input) const;
};

struct EisModel {
    Eigen::VectorXd freq_grid;  // band-restricted, fixed at training time
    MultiForestModel model;     // 4 -> 2 * |freq_grid| ([re; im])
};

struct CurveModel {
    CurveKind kind = CurveKind::IV;
    GridSpec grid;
    MultiForestModel model;  // 2 * |freq_grid| -> grid.n_points
};

struct IndicatorModel {
    std::string indicator;
    PcdKind source = PcdKind::EIS;
    forest::Forest forest;
};

struct GridSearchSummary {
    std::string model;
    forest::ForestParams chosen;
    double mean_rmse = 0.0;
    std::size_t combinations = 0;
};

struct TrainLog {
    std::vector<std::string> messages;
    std::map<std::string, int> skipped_rows;  // per model
};

struct PcdpTrainConfig {
    std::uint64_t seed = 0;
    PresetSelectionConfig preset;
    /// When set, hyperparameters are tuned once per model group by
    /// cross-validated grid search on that group's highest-variance output
    /// column and shared across the group's forests. Otherwise base_params
    /// are used as-is (per-model seeds are always derived from `seed`).
    std::optional<forest::HyperGrid> hyper_grid;
    forest::ForestParams base_params{};
    int cv_folds = 5;
    int threads = 1;
    GridSpec iv_grid{0.0, 3.1, 20};
    GridSpec cv_grid{0.051, 0.40, 100};
    GridSpec lsv_grid{0.1, 0.5, 100};
};

struct PcdpModelBundle {
    PresetFrequencies preset;
    std::optional<EisModel> eis;
    std::vector<CurveModel> curves;          // IV/CV/LSV as training data allows
    std::vector<IndicatorModel> indicators;  // r_o2_total/i_lim/ecsa/i_cross
    PcdpTrainConfig config;
    std::vector<GridSearchSummary> tuning;
    TrainLog log;
};

/// Trains the full bundle from training check-ups. Check-ups lacking a PCD
/// kind are skipped for the models that need it (counts logged); a model
/// with no usable rows is marked absent.
PcdpModelBundle train_pcdp(const std::vector<CheckUp>& train, const PcdpTrainConfig& config);

struct PcdpPrediction {
    EisSpectrum eis;                  // on the bundle's frequency grid
    std::vector<SampledCurve> curves;
    AgingIndicators indicators;       // every value predicted-source
};

/// Chained prediction probe -> EIS -> curves -> indicators.
/// Raises ModelMissing when the bundle has no EIS model; curve/indicator
/// outputs are produced for the models present.
PcdpPrediction predict_pcdp(const PcdpModelBundle& bundle, const ProbeVector& probe);

struct EvalEntry {
    std::string output;  // "eis", "iv", "cv", "lsv", or an indicator name
    std::string source;  // "predicted" or "measured"
    std::string unit;
    numerics::LenientMetrics metrics;
};

struct ScatterPoint {
    double y_true = 0.0;
    double y_pred = 0.0;
    std::string device_ref;  // free-form row label for plot data
};

struct PcdpEvaluation {
    std::vector<EvalEntry> entries;
    std::map<std::string, std::vector<ScatterPoint>> scatter;  // "output/source"
};

/// Evaluates every bundle model on test check-ups that carry the matching
/// ground truth. EIS metrics are pooled over all outputs, curve metrics over
/// their grids; indicator metrics are scalar-wise and reported separately
/// for measured-source and predicted-source inputs.
/// Raises NoGroundTruth when nothing is evaluable.
PcdpEvaluation evaluate_pcdp(const PcdpModelBundle& bundle, const std::vector<CheckUp>& test);

/// Bundle archive: a directory with manifest.json plus per-model forest
/// records. Reloading yields bit-identical predictions.
void save_pcdp_bundle(const PcdpModelBundle& bundle, const std::filesystem::path& dir);
PcdpModelBundle load_pcdp_bundle(const std::filesystem::path& dir);

}  // namespace lifetest::pcdp
