#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lifetest {

// ---------------------------------------------------------------------------
// Canonical data model for life-test datasets. All types are plain value
// types, immutable by convention after construction, and safe to share
// across threads. Units are fixed per field and validated, never converted
// implicitly.
// ---------------------------------------------------------------------------

/// Complex impedance samples of one check-up, frequency-ascending.
/// Impedances are in mOhm*cm^2; the imaginary part keeps the sign of the
/// source data (no negation anywhere downstream).
struct EisSpectrum {
    Eigen::VectorXd frequencies_hz;
    Eigen::VectorXd re;
    Eigen::VectorXd im;
};

enum class CurveKind { IV, CV, LSV, DeltaVI, DeltaIV, DeltaReF, DeltaImF };

const char* curve_kind_name(CurveKind kind);
CurveKind curve_kind_from_name(const std::string& name);

struct CurveAxes {
    const char* x_unit;
    const char* y_unit;
};

/// Canonical axis units for a curve kind. IV: x in A_cm2, y in V.
/// CV/LSV: x in V, y in A_cm2. Delta curves inherit the axes of their
/// source kind (DeltaReF/DeltaImF: x in Hz, y in mohm_cm2).
CurveAxes canonical_axes(CurveKind kind);

/// Generic sampled (x, y) curve with strictly monotone x.
struct SampledCurve {
    CurveKind kind = CurveKind::IV;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    std::string x_unit;
    std::string y_unit;
};

/// Builds a curve with the canonical unit tags for its kind.
SampledCurve make_curve(CurveKind kind, Eigen::VectorXd x, Eigen::VectorXd y);

/// Aging indicators measured at a check-up; absent values mean "not measured".
struct AgingIndicators {
    std::optional<double> i_lim;        // A_cm2
    std::optional<double> r_o2_total;   // s_m
    std::optional<double> ecsa;         // cm2Pt_cm2geo
    std::optional<double> i_cross;      // A_cm2
    std::optional<double> c_rem;        // uF
};

/// Named test-condition parameters; keys are free-form with documented units
/// (e.g. "t_out_c", "i_load_a_cm2"). Values must be finite.
struct TestConditions {
    std::map<std::string, double> values;
};

struct StageTime {
    double value = 0.0;
    std::string unit = "s";  // "s", "h", or "cycles"
};

struct CheckUp {
    std::string stage_id;
    StageTime stage_time;
    std::optional<EisSpectrum> eis;
    std::optional<SampledCurve> iv;
    std::optional<SampledCurve> cv;
    std::optional<SampledCurve> lsv;
    AgingIndicators indicators;
    TestConditions conditions;
};

enum class DeviceClass { PEMFC, PEMWE, Capacitor };

const char* device_class_name(DeviceClass cls);
DeviceClass device_class_from_name(const std::string& name);

/// One device's life test: metadata plus its check-ups ordered by stage_time.
struct LifeTest {
    std::string device_id;
    DeviceClass device_class = DeviceClass::PEMFC;
    std::map<std::string, std::string> metadata;
    std::vector<CheckUp> checkups;
};

/// Selects one check-up, either by stage_id or by stage_time
/// (relative tolerance 1e-9).
struct StageSelector {
    std::optional<std::string> stage_id;
    std::optional<double> stage_time;

    static StageSelector by_id(std::string id);
    static StageSelector by_time(double t);
    std::string describe() const;
};

struct StageSpec {
    StageSelector t1;
    StageSelector t2;
    StageSelector t3;
};

/// Train/test split over device ids. An id of the form
/// "device_id:stage_id" selects a single check-up of a device, which allows
/// per-check-up splits for single-device datasets.
struct SplitSpec {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<std::string> exclusions;
};

struct Violation {
    std::string device_id;
    std::string stage_id;  // empty for device-level violations
    std::string field;
    std::string message;
};

/// Checks every invariant of the data model and reports violations as data.
/// An empty report means the life test is well formed.
std::vector<Violation> validate_lifetest(const LifeTest& lt);

/// Resolves a selector to exactly one check-up.
/// Raises NoMatch if none matches and Ambiguous if more than one does.
const CheckUp& resolve_stage(const LifeTest& lt, const StageSelector& selector);

}  // namespace lifetest
