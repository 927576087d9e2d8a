#include "lifetest/core/types.hpp"

#include <cmath>
#include <sstream>

#include "lifetest/core/error.hpp"

namespace lifetest {

const char* curve_kind_name(CurveKind kind) {
    switch (kind) {
        case CurveKind::IV: return "iv";
        case CurveKind::CV: return "cv";
        case CurveKind::LSV: return "lsv";
        case CurveKind::DeltaVI: return "delta_vi";
        case CurveKind::DeltaIV: return "delta_iv";
        case CurveKind::DeltaReF: return "delta_re_f";
        case CurveKind::DeltaImF: return "delta_im_f";
    }
    return "?";
}

CurveKind curve_kind_from_name(const std::string& name) {
    if (name == "iv") return CurveKind::IV;
    if (name == "cv") return CurveKind::CV;
    if (name == "lsv") return CurveKind::LSV;
    if (name == "delta_vi") return CurveKind::DeltaVI;
    if (name == "delta_iv") return CurveKind::DeltaIV;
    if (name == "delta_re_f") return CurveKind::DeltaReF;
    if (name == "delta_im_f") return CurveKind::DeltaImF;
    raise(Errc::SchemaError, "unknown curve kind '" + name + "'");
}

CurveAxes canonical_axes(CurveKind kind) {
    switch (kind) {
        case CurveKind::IV: return {"A_cm2", "V"};
        case CurveKind::CV: return {"V", "A_cm2"};
        case CurveKind::LSV: return {"V", "A_cm2"};
        case CurveKind::DeltaVI: return {"A_cm2", "V"};
        case CurveKind::DeltaIV: return {"V", "A_cm2"};
        case CurveKind::DeltaReF: return {"Hz", "mohm_cm2"};
        case CurveKind::DeltaImF: return {"Hz", "mohm_cm2"};
    }
    return {"?", "?"};
}

SampledCurve make_curve(CurveKind kind, Eigen::VectorXd x, Eigen::VectorXd y) {
    const CurveAxes axes = canonical_axes(kind);
    SampledCurve curve;
    curve.kind = kind;
    curve.x = std::move(x);
    curve.y = std::move(y);
    curve.x_unit = axes.x_unit;
    curve.y_unit = axes.y_unit;
    return curve;
}

const char* device_class_name(DeviceClass cls) {
    switch (cls) {
        case DeviceClass::PEMFC: return "PEMFC";
        case DeviceClass::PEMWE: return "PEMWE";
        case DeviceClass::Capacitor: return "Capacitor";
    }
    return "?";
}

DeviceClass device_class_from_name(const std::string& name) {
    if (name == "PEMFC") return DeviceClass::PEMFC;
    if (name == "PEMWE") return DeviceClass::PEMWE;
    if (name == "Capacitor") return DeviceClass::Capacitor;
    raise(Errc::SchemaError, "unknown device class '" + name + "'");
}

StageSelector StageSelector::by_id(std::string id) {
    StageSelector s;
    s.stage_id = std::move(id);
    return s;
}

StageSelector StageSelector::by_time(double t) {
    StageSelector s;
    s.stage_time = t;
    return s;
}

std::string StageSelector::describe() const {
    std::ostringstream out;
    if (stage_id) out << "stage_id=" << *stage_id;
    if (stage_time) {
        if (stage_id) out << ",";
        out << "stage_time=" << *stage_time;
    }
    if (!stage_id && !stage_time) out << "<empty>";
    return out.str();
}

namespace {

bool all_finite(const Eigen::VectorXd& v) {
    return v.allFinite();
}

bool strictly_increasing(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

bool strictly_monotone(const Eigen::VectorXd& v) {
    if (v.size() < 2) return true;
    const bool up = v[1] > v[0];
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (up && !(v[i] > v[i - 1])) return false;
        if (!up && !(v[i] < v[i - 1])) return false;
    }
    return true;
}

void check_eis(const LifeTest& lt, const CheckUp& cu, const EisSpectrum& eis,
               std::vector<Violation>& out) {
    auto add = [&](const std::string& field, const std::string& message) {
        out.push_back({lt.device_id, cu.stage_id, field, message});
    };
    if (eis.frequencies_hz.size() != eis.re.size() || eis.re.size() != eis.im.size())
        add("eis", "frequency/re/im lengths differ");
    if (!strictly_increasing(eis.frequencies_hz))
        add("eis.frequencies_hz", "frequencies not strictly increasing");
    if (eis.frequencies_hz.size() > 0 && eis.frequencies_hz.minCoeff() <= 0.0)
        add("eis.frequencies_hz", "frequencies must be positive");
    if (!all_finite(eis.re) || !all_finite(eis.im) || !all_finite(eis.frequencies_hz))
        add("eis", "non-finite value");
}

void check_curve(const LifeTest& lt, const CheckUp& cu, const SampledCurve& curve,
                 const char* field, std::vector<Violation>& out) {
    auto add = [&](const std::string& message) {
        out.push_back({lt.device_id, cu.stage_id, field, message});
    };
    if (curve.x.size() != curve.y.size()) add("x/y lengths differ");
    if (!strictly_monotone(curve.x)) add("x not strictly monotone");
    if (!all_finite(curve.x) || !all_finite(curve.y)) add("non-finite value");
    const CurveAxes axes = canonical_axes(curve.kind);
    if (curve.x_unit != axes.x_unit)
        add("x unit '" + curve.x_unit + "' != canonical '" + axes.x_unit + "'");
    if (curve.y_unit != axes.y_unit)
        add("y unit '" + curve.y_unit + "' != canonical '" + axes.y_unit + "'");
}

void check_positive(const LifeTest& lt, const CheckUp& cu, const std::optional<double>& v,
                    const char* field, bool must_be_positive, std::vector<Violation>& out) {
    if (!v) return;
    if (!std::isfinite(*v))
        out.push_back({lt.device_id, cu.stage_id, field, "non-finite value"});
    else if (must_be_positive && *v <= 0.0)
        out.push_back({lt.device_id, cu.stage_id, field, "must be > 0"});
}

}  // namespace

std::vector<Violation> validate_lifetest(const LifeTest& lt) {
    std::vector<Violation> out;
    if (lt.device_id.empty())
        out.push_back({lt.device_id, "", "device_id", "empty device id"});

    for (std::size_t i = 1; i < lt.checkups.size(); ++i) {
        if (lt.checkups[i].stage_time.value < lt.checkups[i - 1].stage_time.value) {
            out.push_back({lt.device_id, lt.checkups[i].stage_id, "checkups",
                           "checkups unsorted (stage_time not ascending)"});
            break;
        }
    }
    for (std::size_t i = 0; i < lt.checkups.size(); ++i) {
        const CheckUp& cu = lt.checkups[i];
        if (cu.stage_time.value < 0.0)
            out.push_back({lt.device_id, cu.stage_id, "stage_time", "must be >= 0"});
        for (std::size_t j = i + 1; j < lt.checkups.size(); ++j)
            if (!cu.stage_id.empty() && cu.stage_id == lt.checkups[j].stage_id)
                out.push_back({lt.device_id, cu.stage_id, "stage_id", "duplicate stage id"});
        if (cu.eis) check_eis(lt, cu, *cu.eis, out);
        if (cu.iv) check_curve(lt, cu, *cu.iv, "iv", out);
        if (cu.cv) check_curve(lt, cu, *cu.cv, "cv", out);
        if (cu.lsv) check_curve(lt, cu, *cu.lsv, "lsv", out);
        check_positive(lt, cu, cu.indicators.i_lim, "i_lim", false, out);
        check_positive(lt, cu, cu.indicators.r_o2_total, "r_o2_total", true, out);
        check_positive(lt, cu, cu.indicators.ecsa, "ecsa", true, out);
        check_positive(lt, cu, cu.indicators.i_cross, "i_cross", false, out);
        check_positive(lt, cu, cu.indicators.c_rem, "c_rem", true, out);
        for (const auto& [key, value] : cu.conditions.values)
            if (!std::isfinite(value))
                out.push_back({lt.device_id, cu.stage_id, "conditions." + key, "non-finite value"});
    }
    return out;
}

const CheckUp& resolve_stage(const LifeTest& lt, const StageSelector& selector) {
    if (!selector.stage_id && !selector.stage_time)
        raise(Errc::ConfigError, "stage selector is empty");
    const CheckUp* found = nullptr;
    for (const CheckUp& cu : lt.checkups) {
        bool match = false;
        if (selector.stage_id && cu.stage_id == *selector.stage_id) match = true;
        if (selector.stage_time) {
            const double a = cu.stage_time.value;
            const double b = *selector.stage_time;
            if (std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b))) match = true;
        }
        if (!match) continue;
        if (found)
            raise(Errc::Ambiguous, "selector (" + selector.describe() + ") matches more than one check-up of device " + lt.device_id);
        found = &cu;
    }
    if (!found)
        raise(Errc::NoMatch, "selector (" + selector.describe() + ") matches no check-up of device " + lt.device_id);
    return *found;
}

}  // namespace lifetest
