#include "lifetest/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::data {

using nlohmann::json;

Eigen::VectorXd decade_frequency_grid() {
    static const double values[41] = {
        1.0,    1.2589, 1.5849, 1.9953, 2.5119, 3.1623, 3.9811, 5.0119, 6.3096,
        7.9433, 10.0,   12.589, 15.849, 19.953, 25.119, 31.623, 39.811, 50.119,
        63.096, 79.433, 100.0,  125.89, 158.49, 199.53, 251.19, 316.23, 398.11,
        501.19, 630.96, 794.33, 1000.0, 1258.9, 1584.9, 1995.3, 2511.9, 3162.3,
        3981.1, 5011.9, 6309.6, 7943.3, 10000.0};
    return Eigen::Map<const Eigen::VectorXd>(values, 41);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct DeviceStates {
    // base equivalent-circuit parameters (jittered per device)
    double r0, r1, tau1, alpha1, r2, tau2, alpha2;
    double severity;
    // drift rates over the full horizon
    double rate_r0, rate_r1, rate_r2, rate_ecsa, rate_icross, rate_crem;
};

struct StageStates {
    double r0, r1, r2;
    double ecsa, icross, c_rem;
    double j_lim, r_o2;
    double r_ohm;  // Ohm*cm^2
};

void check_config(const SynthConfig& c) {
    auto bad = [](const std::string& msg) { raise(Errc::ConfigError, msg); };
    if (c.device_count < 1) bad("device_count must be >= 1");
    if (c.test_count < 0 || c.test_count > c.device_count) bad("test_count out of range");
    if (c.stage_times.empty()) bad("stage_times must be nonempty");
    for (std::size_t i = 0; i < c.stage_times.size(); ++i) {
        if (c.stage_times[i] < 0.0) bad("stage_times must be >= 0");
        if (i > 0 && !(c.stage_times[i] > c.stage_times[i - 1]))
            bad("stage_times must be strictly increasing");
    }
    if (!(c.r0 > 0) || !(c.r1 > 0) || !(c.r2 > 0)) bad("resistances must be > 0");
    if (!(c.tau1 > 0) || !(c.tau2 > 0)) bad("time constants must be > 0");
    if (!(c.alpha1 > 0) || c.alpha1 > 1 || !(c.alpha2 > 0) || c.alpha2 > 1)
        bad("alpha must be in (0, 1]");
    if (c.curve_noise < 0) bad("curve_noise must be >= 0");
    if (!(c.severity_lo <= c.severity_hi)) bad("severity range inverted");
    if (!(c.j_lim_scale > 0) || !(c.r_o2_scale > 0) || !(c.ecsa0 > 0) || !(c.icross0 > 0) ||
        !(c.c_rem0 > 0))
        bad("indicator couplings must be > 0");
    if (c.drift_exponent <= 0) bad("drift_exponent must be > 0");
}

DeviceStates draw_device(const SynthConfig& c, std::mt19937_64& rng) {
    DeviceStates d{};
    auto jitter = [&](double base) {
        return base * (1.0 + c.base_jitter * (2.0 * unit_real(rng) - 1.0));
    };
    d.r0 = jitter(c.r0);
    d.r1 = jitter(c.r1);
    d.tau1 = jitter(c.tau1);
    d.alpha1 = std::clamp(jitter(c.alpha1), 0.05, 1.0);
    d.r2 = jitter(c.r2);
    d.tau2 = jitter(c.tau2);
    d.alpha2 = std::clamp(jitter(c.alpha2), 0.05, 1.0);
    d.severity = uniform_real(rng, c.severity_lo, c.severity_hi);
    auto rate = [&](double drift) {
        // keep the co-movement direction even with coupling jitter
        const double wiggle = std::max(1.0 + c.coupling_jitter * gaussian(rng), 0.05);
        return drift * d.severity * wiggle;
    };
    d.rate_r0 = rate(c.r0_drift);
    d.rate_r1 = rate(c.r1_drift);
    d.rate_r2 = rate(c.r2_drift);
    d.rate_ecsa = rate(c.ecsa_drop);
    d.rate_icross = rate(c.icross_rise);
    d.rate_crem = rate(c.c_rem_drop);
    return d;
}

StageStates stage_states(const SynthConfig& c, const DeviceStates& d, double t, double horizon) {
    const double prof = horizon > 0.0 ? std::pow(t / horizon, c.drift_exponent) : 0.0;
    StageStates s{};
    s.r0 = d.r0 * (1.0 + d.rate_r0 * prof);
    s.r1 = d.r1 * (1.0 + d.rate_r1 * prof);
    s.r2 = d.r2 * (1.0 + d.rate_r2 * prof);
    s.ecsa = c.ecsa0 * std::exp(-d.rate_ecsa * prof);
    s.icross = c.icross0 * (1.0 + d.rate_icross * prof);
    s.c_rem = c.c_rem0 * std::exp(-d.rate_crem * prof);
    // the polarization curve and the limiting current share one latent state
    // (total resistance); the oxygen-transport resistance tracks the
    // low-frequency arc alone
    s.j_lim = c.j_lim_scale / (s.r0 + s.r1 + s.r2);
    s.r_o2 = c.r_o2_scale * s.r2;
    s.r_ohm = (s.r0 + s.r1 + s.r2) / 1000.0;
    return s;
}

/// Z(f) on the measurement grid; the imaginary part is stored as computed
/// (negative below the arc under the e^{+iwt} convention).
EisSpectrum make_eis(const Eigen::VectorXd& freqs, const DeviceStates& d, const StageStates& s) {
    EisSpectrum eis;
    eis.frequencies_hz = freqs;
    eis.re.resize(freqs.size());
    eis.im.resize(freqs.size());
    for (Eigen::Index i = 0; i < freqs.size(); ++i) {
        const double w = 2.0 * kPi * freqs[i];
        auto arc = [&](double r, double tau, double alpha) {
            const double mag = std::pow(w * tau, alpha);
            const std::complex<double> iwta(mag * std::cos(alpha * kPi / 2.0),
                                            mag * std::sin(alpha * kPi / 2.0));
            return r / (1.0 + iwta);
        };
        const std::complex<double> z =
            s.r0 + arc(s.r1, d.tau1, d.alpha1) + arc(s.r2, d.tau2, d.alpha2);
        eis.re[i] = z.real();
        eis.im[i] = z.imag();
    }
    return eis;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    v[n - 1] = hi;
    return v;
}

SampledCurve make_iv(DeviceClass cls, const StageStates& s) {
    const Eigen::VectorXd j = linspace(0.0, 3.2, 33);
    if (cls != DeviceClass::PEMWE && s.j_lim <= 3.3)
        raise(Errc::ConfigError,
              "j_lim_scale too small: drifted limiting current must stay above the measured range");
    Eigen::VectorXd v(j.size());
    for (Eigen::Index i = 0; i < j.size(); ++i) {
        const double tafel = 0.06 * std::log10(1.0 + j[i] / 0.01);
        if (cls == DeviceClass::PEMWE) {
            v[i] = 1.48 + tafel + s.r_ohm * j[i];
        } else {
            v[i] = 0.95 - tafel - s.r_ohm * j[i] + 0.05 * std::log(1.0 - j[i] / s.j_lim);
        }
    }
    return make_curve(CurveKind::IV, j, std::move(v));
}

SampledCurve make_cv(const SynthConfig& c, const StageStates& s) {
    const Eigen::VectorXd v = linspace(0.04, 0.45, 83);
    Eigen::VectorXd i(v.size());
    const double scale = s.ecsa / c.ecsa0;
    for (Eigen::Index p = 0; p < v.size(); ++p) {
        const double g1 = std::exp(-std::pow((v[p] - 0.125) / 0.03, 2));
        const double g2 = std::exp(-std::pow((v[p] - 0.22) / 0.045, 2));
        i[p] = 0.35 + scale * 3.5 * (g1 + 0.65 * g2);
    }
    return make_curve(CurveKind::CV, v, std::move(i));
}

SampledCurve make_lsv(const StageStates& s) {
    const Eigen::VectorXd v = linspace(0.05, 0.55, 51);
    Eigen::VectorXd i(v.size());
    for (Eigen::Index p = 0; p < v.size(); ++p)
        i[p] = s.icross * (1.0 + 0.05 * (v[p] - 0.05));
    return make_curve(CurveKind::LSV, v, std::move(i));
}

void add_noise(Eigen::VectorXd& y, double level, std::mt19937_64& rng) {
    if (level <= 0.0 || y.size() < 2) return;
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / y.size());
    if (sd == 0.0) return;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += level * sd * gaussian(rng);
}

}  // namespace

std::pair<Collection, SplitSpec> generate_synthetic(const SynthConfig& config) {
    check_config(config);
    const Eigen::VectorXd freqs = decade_frequency_grid();
    const double horizon = config.stage_times.back();

    Collection collection;
    collection.device_class = config.device_class;
    collection.provenance = {"synthetic equivalent-circuit dataset"};

    const char* prefix = config.device_class == DeviceClass::PEMFC    ? "cell"
                         : config.device_class == DeviceClass::PEMWE ? "we"
                                                                      : "cap";
    for (int dev = 0; dev < config.device_count; ++dev) {
        std::mt19937_64 dev_rng = make_rng(derive_seed(config.seed, 0xdc11, dev));
        const DeviceStates d = draw_device(config, dev_rng);

        LifeTest lt;
        char id[32];
        std::snprintf(id, sizeof(id), "%s_%02d", prefix, dev + 1);
        lt.device_id = id;
        lt.device_class = config.device_class;
        char sev[32];
        std::snprintf(sev, sizeof(sev), "%.3f", d.severity);
        lt.metadata = {{"severity", sev}};

        for (std::size_t st = 0; st < config.stage_times.size(); ++st) {
            const double t = config.stage_times[st];
            const StageStates states = stage_states(config, d, t, horizon);
            std::mt19937_64 noise_rng = make_rng(derive_seed(config.seed, dev * 1000 + st, 0x9015e));

            CheckUp cu;
            char stage_id[16];
            std::snprintf(stage_id, sizeof(stage_id), "s%02zu", st);
            cu.stage_id = stage_id;
            cu.stage_time = {t, config.stage_time_unit};

            EisSpectrum eis = make_eis(freqs, d, states);
            add_noise(eis.re, config.curve_noise, noise_rng);
            add_noise(eis.im, config.curve_noise, noise_rng);
            cu.eis = std::move(eis);

            if (config.device_class != DeviceClass::Capacitor) {
                SampledCurve iv = make_iv(config.device_class, states);
                add_noise(iv.y, config.curve_noise, noise_rng);
                cu.iv = std::move(iv);
            }
            if (config.device_class == DeviceClass::PEMFC) {
                SampledCurve cv = make_cv(config, states);
                add_noise(cv.y, config.curve_noise, noise_rng);
                cu.cv = std::move(cv);
                SampledCurve lsv = make_lsv(states);
                add_noise(lsv.y, config.curve_noise, noise_rng);
                cu.lsv = std::move(lsv);

                cu.indicators.i_lim = states.j_lim;
                cu.indicators.r_o2_total = states.r_o2;
                cu.indicators.ecsa = states.ecsa;
                cu.indicators.i_cross = states.icross;
                cu.conditions.values = {{"t_out_c", 80.0},
                                        {"i_load_a_cm2", 1.0},
                                        {"i_amp_a_cm2", 0.1}};
            }
            if (config.device_class == DeviceClass::Capacitor)
                cu.indicators.c_rem = states.c_rem;

            lt.checkups.push_back(std::move(cu));
        }
        collection.devices.push_back(std::move(lt));
    }

    // seeded test-device choice
    std::vector<int> order(static_cast<std::size_t>(config.device_count));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 split_rng = make_rng(derive_seed(config.seed, 0x5911));
    for (int i = 0; i < config.test_count; ++i) {
        const auto j = i + static_cast<int>(bounded_index(
                               split_rng, static_cast<std::uint64_t>(config.device_count - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<bool> is_test(static_cast<std::size_t>(config.device_count), false);
    for (int i = 0; i < config.test_count; ++i) is_test[static_cast<std::size_t>(order[i])] = true;

    SplitSpec split;
    for (int dev = 0; dev < config.device_count; ++dev) {
        const std::string& device_id = collection.devices[static_cast<std::size_t>(dev)].device_id;
        (is_test[static_cast<std::size_t>(dev)] ? split.test_ids : split.train_ids)
            .push_back(device_id);
    }
    return {std::move(collection), std::move(split)};
}

SynthConfig synth_config_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::ParseError, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::ParseError, path.string() + ": " + e.what());
    }

    SynthConfig c;
    auto take = [&](const char* key, auto& slot) {
        if (j.contains(key)) {
            j.at(key).get_to(slot);
            j.erase(key);
        }
    };
    take("device_count", c.device_count);
    take("test_count", c.test_count);
    if (j.contains("device_class")) {
        c.device_class = device_class_from_name(j.at("device_class").get<std::string>());
        j.erase("device_class");
    }
    take("stage_times", c.stage_times);
    take("stage_time_unit", c.stage_time_unit);
    take("r0", c.r0);
    take("r1", c.r1);
    take("tau1", c.tau1);
    take("alpha1", c.alpha1);
    take("r2", c.r2);
    take("tau2", c.tau2);
    take("alpha2", c.alpha2);
    take("base_jitter", c.base_jitter);
    take("severity_lo", c.severity_lo);
    take("severity_hi", c.severity_hi);
    take("coupling_jitter", c.coupling_jitter);
    take("r0_drift", c.r0_drift);
    take("r1_drift", c.r1_drift);
    take("r2_drift", c.r2_drift);
    take("ecsa_drop", c.ecsa_drop);
    take("icross_rise", c.icross_rise);
    take("c_rem_drop", c.c_rem_drop);
    take("drift_exponent", c.drift_exponent);
    take("j_lim_scale", c.j_lim_scale);
    take("r_o2_scale", c.r_o2_scale);
    take("ecsa0", c.ecsa0);
    take("icross0", c.icross0);
    take("c_rem0", c.c_rem0);
    take("curve_noise", c.curve_noise);
    take("seed", c.seed);
    if (!j.empty())
        raise(Errc::ConfigError, path.string() + ": unknown key '" + j.begin().key() + "'");
    check_config(c);
    return c;
}

}  // namespace lifetest::data
