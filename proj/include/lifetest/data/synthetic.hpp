#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifetest/core/types.hpp"
#include "lifetest/data/dataset.hpp"

namespace lifetest::data {

/// 41 log-spaced frequencies, 10 per decade from 1 Hz to 10 kHz, rounded to
/// 5 significant figures (the usual impedance-analyzer grid).
Eigen::VectorXd decade_frequency_grid();

/// Configuration of the synthetic ground-truth generator. Devices are
/// equivalent-circuit cells
///
///   Z(f) = R0 + R1/(1 + (i 2 pi f tau1)^alpha1) + R2/(1 + (i 2 pi f tau2)^alpha2)
///
/// whose parameters drift monotonically with stage time at per-device rates.
/// A shared per-device severity couples all drift rates, so probe
/// impedances, curves, and indicators co-evolve the way degrading cells do.
/// Indicators are computed analytically from the drifted states and stay
/// noise-free; Gaussian noise is applied to curves only.
struct SynthConfig {
    int device_count = 30;
    int test_count = 8;
    DeviceClass device_class = DeviceClass::PEMFC;
    std::vector<double> stage_times{0.0, 1000.0, 5000.0, 10000.0, 30000.0};
    std::string stage_time_unit = "cycles";

    // equivalent-circuit base parameters (mOhm*cm^2, seconds)
    double r0 = 45.0;
    double r1 = 25.0;
    double tau1 = 2.5e-4;
    double alpha1 = 0.92;
    double r2 = 20.0;
    double tau2 = 0.02;
    double alpha2 = 0.85;

    double base_jitter = 0.05;      // per-device spread of base parameters
    double severity_lo = 0.5;       // per-device degradation severity range
    double severity_hi = 1.5;
    double coupling_jitter = 0.08;  // decorrelation between drifting states

    // relative drift of each state over the full horizon, scaled by severity
    double r0_drift = 0.12;
    double r1_drift = 0.20;
    double r2_drift = 0.45;
    double ecsa_drop = 0.35;
    double icross_rise = 0.80;
    double c_rem_drop = 0.25;

    // drift profile: state(t) moves with (t/horizon)^drift_exponent
    double drift_exponent = 0.5;

    // indicator couplings
    double j_lim_scale = 450.0;  // I_lim = j_lim_scale / (R0+R1+R2)(t)  [A_cm2]
    double r_o2_scale = 11.0;    // R_O2,total = r_o2_scale * R2(t)  [s_m]
    double ecsa0 = 58.0;         // cm2Pt_cm2geo
    double icross0 = 1.5e-3;     // A_cm2
    double c_rem0 = 2200.0;      // uF (capacitor class)

    double curve_noise = 0.01;  // relative to each clean curve's std dev
    std::uint64_t seed = 0;
};

SynthConfig synth_config_from_json_file(const std::filesystem::path& path);

/// Generates a deterministic collection plus a seeded train/test split.
/// PEMFC devices carry EIS + I-V + CV + LSV and the four fuel-cell
/// indicators; PEMWE devices carry EIS + I-V; capacitors carry EIS and
/// c_rem.
std::pair<Collection, SplitSpec> generate_synthetic(const SynthConfig& config);

}  // namespace lifetest::data
