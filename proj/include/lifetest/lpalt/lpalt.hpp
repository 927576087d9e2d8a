#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lifetest/core/types.hpp"
#include "lifetest/forest/grid_search.hpp"
#include "lifetest/numerics/grid.hpp"
#include "lifetest/pcdp/pcdp.hpp"
#include "lifetest/sisso/sisso.hpp"

namespace lifetest::lpalt {

using numerics::GridSpec;
using pcdp::EvalEntry;
using pcdp::GridSearchSummary;
using pcdp::ScatterPoint;
using pcdp::TrainLog;

// ---------------------------------------------------------------------------
// Life-prediction-driven accelerated testing: difference curves between two
// early check-ups, two-point descriptor search against the end-of-test
// indicator change, and forests that predict that change.
// ---------------------------------------------------------------------------

struct LpAltGrids {
    GridSpec iv{0.0, 3.1, 20};
    GridSpec cv{0.051, 0.40, 100};
};

struct DifferenceCurveSet {
    std::optional<SampledCurve> delta_vi;  // IV(t2) - IV(t1), standardized
    std::optional<SampledCurve> delta_iv;  // CV(t1) - CV(t2), standardized (reversed sign)
    std::optional<SampledCurve> delta_re;  // Re(t2) - Re(t1), shared frequency grid
    std::optional<SampledCurve> delta_im;  // Im(t2) - Im(t1)
    std::vector<std::string> notes;
};

/// Builds the difference curves between two check-ups. I-V and CV curves are
/// standardized onto the configured grids first; EIS is subtracted on the
/// shared measured frequency grid (a grid mismatch across the two stages
/// raises FrequencyGridMismatch, never interpolation). PCD missing from
/// either stage yields an absent delta with a note.
DifferenceCurveSet build_difference_curves(const CheckUp& t1, const CheckUp& t2,
                                           const LpAltGrids& grids = {});

struct LpAltConfig {
    std::uint64_t seed = 0;
    sisso::SissoConfig sisso{};
    std::optional<forest::HyperGrid> hyper_grid;  // see PcdpTrainConfig
    forest::ForestParams base_params{};
    int cv_folds = 5;
    int threads = 1;
    LpAltGrids grids{};
};

/// One indicator's model: its descriptor formula(s) and the forest mapping
/// formula values to the indicator change from t1 to t3.
struct IndicatorHead {
    std::string indicator;
    std::vector<sisso::FeatureFormula> formulas;  // one per source delta curve
    forest::Forest forest;
    int training_rows = 0;
};

struct LpAltModelBundle {
    StageSpec stages;
    LpAltGrids grids;
    std::vector<IndicatorHead> heads;
    LpAltConfig config;
    std::vector<GridSearchSummary> tuning;
    TrainLog log;
};

/// Trains per-indicator heads on the training devices. i_lim uses one
/// formula from the I-V difference curve; ecsa one from the CV difference
/// curve; r_o2_total and c_rem use two formulas, one each from the Re and Im
/// difference curves. Devices lacking the required PCD at t1/t2 or the
/// indicator at t1/t3 are skipped per indicator with a logged count;
/// an indicator with no rows is absent. Raises NoTrainingRows when nothing
/// is trainable.
LpAltModelBundle train_lpalt(const std::vector<LifeTest>& train, const StageSpec& stages,
                             const LpAltConfig& config);

struct LpAltPrediction {
    AgingIndicators t3_estimate;
    AgingIndicators delta;  // t3_estimate - measured t1 value, exactly
};

/// Predicts the t3 indicators of one device from its t1/t2 check-ups:
/// evaluate the formulas on the difference curves, forest-predict the
/// change, add the measured t1 value back.
/// Raises ModelMissing / MissingT1Indicator / GridMismatch.
LpAltPrediction predict_lpalt(const LpAltModelBundle& bundle, const LifeTest& device);

struct LpAltEvaluation {
    std::vector<EvalEntry> entries;  // per indicator, t3 estimates vs truth
    std::map<std::string, std::vector<ScatterPoint>> scatter;
};

/// Evaluates the bundle on test devices carrying t3 ground truth.
/// Devices that cannot be predicted for an indicator are skipped with a
/// note; raises NoGroundTruth when nothing is evaluable.
LpAltEvaluation evaluate_lpalt(const LpAltModelBundle& bundle,
                               const std::vector<LifeTest>& test);

struct AccelerationRecord {
    double t1_time = 0.0;
    double t2_time = 0.0;
    double horizon = 0.0;
    double ratio = 0.0;  // horizon / t2_time
    std::string time_unit;
    std::vector<EvalEntry> metrics;
};

/// Acceleration summary: how much shorter the early test is than the full
/// horizon. Stage selectors must carry numeric times; a zero t2 time raises
/// ZeroT2Time.
AccelerationRecord acceleration_report(const StageSpec& stages, double horizon,
                                       const std::string& time_unit = "",
                                       std::vector<EvalEntry> metrics = {});

void save_lpalt_bundle(const LpAltModelBundle& bundle, const std::filesystem::path& dir);
LpAltModelBundle load_lpalt_bundle(const std::filesystem::path& dir);

}  // namespace lifetest::lpalt
