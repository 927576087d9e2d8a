#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "lifetest/core/error.hpp"
#include "lifetest/data/adapter.hpp"
#include "lifetest/data/dataset.hpp"
#include "lifetest/data/synthetic.hpp"

using namespace lifetest;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "lifetest_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Field-by-field comparison oracle for round-trip checks.
void require_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    REQUIRE(a.size() == b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

void require_equal(const std::optional<SampledCurve>& a, const std::optional<SampledCurve>& b) {
    REQUIRE(a.has_value() == b.has_value());
    if (!a) return;
    REQUIRE(a->kind == b->kind);
    REQUIRE(a->x_unit == b->x_unit);
    REQUIRE(a->y_unit == b->y_unit);
    require_equal(a->x, b->x);
    require_equal(a->y, b->y);
}

void require_equal(const std::optional<double>& a, const std::optional<double>& b) {
    REQUIRE(a.has_value() == b.has_value());
    if (a) REQUIRE(*a == *b);
}

void require_equal(const data::Collection& a, const data::Collection& b) {
    REQUIRE(a.device_class == b.device_class);
    REQUIRE(a.devices.size() == b.devices.size());
    for (std::size_t d = 0; d < a.devices.size(); ++d) {
        const LifeTest& x = a.devices[d];
        const LifeTest& y = b.devices[d];
        REQUIRE(x.device_id == y.device_id);
        REQUIRE(x.metadata == y.metadata);
        REQUIRE(x.checkups.size() == y.checkups.size());
        for (std::size_t c = 0; c < x.checkups.size(); ++c) {
            const CheckUp& p = x.checkups[c];
            const CheckUp& q = y.checkups[c];
            REQUIRE(p.stage_id == q.stage_id);
            REQUIRE(p.stage_time.value == q.stage_time.value);
            REQUIRE(p.stage_time.unit == q.stage_time.unit);
            REQUIRE(p.conditions.values == q.conditions.values);
            REQUIRE(p.eis.has_value() == q.eis.has_value());
            if (p.eis) {
                require_equal(p.eis->frequencies_hz, q.eis->frequencies_hz);
                require_equal(p.eis->re, q.eis->re);
                require_equal(p.eis->im, q.eis->im);
            }
            require_equal(p.iv, q.iv);
            require_equal(p.cv, q.cv);
            require_equal(p.lsv, q.lsv);
            require_equal(p.indicators.i_lim, q.indicators.i_lim);
            require_equal(p.indicators.r_o2_total, q.indicators.r_o2_total);
            require_equal(p.indicators.ecsa, q.indicators.ecsa);
            require_equal(p.indicators.i_cross, q.indicators.i_cross);
            require_equal(p.indicators.c_rem, q.indicators.c_rem);
        }
    }
}

}  // namespace

TEST_CASE("write/load round-trips a synthetic collection", "[data][roundtrip]") {
    data::SynthConfig config;
    config.device_count = 4;
    config.test_count = 1;
    config.seed = 5;
    const auto [collection, split] = data::generate_synthetic(config);
    const fs::path dir = temp_dir("roundtrip");
    const fs::path manifest = data::write_dataset(collection, split, dir);
    const auto [loaded, loaded_split] = data::load_dataset(manifest);
    require_equal(collection, loaded);
    REQUIRE(loaded_split.train_ids == split.train_ids);
    REQUIRE(loaded_split.test_ids == split.test_ids);
    REQUIRE(loaded_split.exclusions == split.exclusions);
}

TEST_CASE("empty collection round-trips", "[data][roundtrip]") {
    data::Collection empty;
    const fs::path dir = temp_dir("empty");
    const fs::path manifest = data::write_dataset(empty, SplitSpec{}, dir);
    const auto [loaded, split] = data::load_dataset(manifest);
    CHECK(loaded.devices.empty());
    CHECK(split.train_ids.empty());
}

TEST_CASE("missing referenced file raises ParseError with the path", "[data][errors]") {
    data::SynthConfig config;
    config.device_count = 2;
    config.test_count = 1;
    config.seed = 8;
    const auto [collection, split] = data::generate_synthetic(config);
    const fs::path dir = temp_dir("missing");
    const fs::path manifest = data::write_dataset(collection, split, dir);
    fs::remove(dir / "devices" / collection.devices[0].device_id / "stage000" / "eis.csv");
    try {
        data::load_dataset(manifest);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("eis.csv") != std::string::npos);
    }
}

TEST_CASE("synthetic generation is deterministic", "[data][synthetic]") {
    data::SynthConfig config;
    config.device_count = 5;
    config.test_count = 2;
    config.seed = 321;
    const auto [a, split_a] = data::generate_synthetic(config);
    const auto [b, split_b] = data::generate_synthetic(config);
    require_equal(a, b);
    REQUIRE(split_a.test_ids == split_b.test_ids);
}

TEST_CASE("zero drift and zero noise give identical check-ups", "[data][synthetic]") {
    data::SynthConfig config;
    config.device_count = 1;
    config.test_count = 0;
    config.curve_noise = 0.0;
    config.r0_drift = config.r1_drift = config.r2_drift = 0.0;
    config.ecsa_drop = config.icross_rise = config.c_rem_drop = 0.0;
    config.seed = 4;
    const auto [collection, split] = data::generate_synthetic(config);
    const LifeTest& lt = collection.devices[0];
    REQUIRE(lt.checkups.size() == 5);
    for (std::size_t c = 1; c < lt.checkups.size(); ++c) {
        require_equal(lt.checkups[0].eis->re, lt.checkups[c].eis->re);
        require_equal(lt.checkups[0].eis->im, lt.checkups[c].eis->im);
        require_equal(lt.checkups[0].iv, lt.checkups[c].iv);
        REQUIRE(*lt.checkups[0].indicators.ecsa == *lt.checkups[c].indicators.ecsa);
    }
}

TEST_CASE("equivalent-circuit midpoint has the analytic semicircle value",
          "[data][synthetic][oracle]") {
    // single-arc circuit at f = 1/(2 pi tau1) with alpha1 = 1: the arc
    // contributes (R1/2, -R1/2); the second arc is made negligible
    data::SynthConfig config;
    config.device_count = 1;
    config.test_count = 0;
    config.stage_times = {0.0};
    config.base_jitter = 0.0;
    config.coupling_jitter = 0.0;
    config.curve_noise = 0.0;
    config.r0 = 40.0;
    config.r1 = 30.0;
    config.alpha1 = 1.0;
    config.tau1 = 1.0 / (2.0 * 3.14159265358979323846 * 10.0);  // midpoint at 10 Hz
    config.r2 = 1e-9;
    config.seed = 1;
    const auto [collection, split] = data::generate_synthetic(config);
    const EisSpectrum& eis = *collection.devices[0].checkups[0].eis;
    Eigen::Index at = -1;
    for (Eigen::Index i = 0; i < eis.frequencies_hz.size(); ++i)
        if (eis.frequencies_hz[i] == 10.0) at = i;
    REQUIRE(at >= 0);
    CHECK(eis.re[at] == Catch::Approx(40.0 + 15.0).margin(1e-6));
    CHECK(eis.im[at] == Catch::Approx(-15.0).margin(1e-6));
}

TEST_CASE("synthetic indicators are strictly monotone under nonzero drift",
          "[data][synthetic][property]") {
    data::SynthConfig config;
    config.device_count = 6;
    config.test_count = 0;
    config.seed = 77;
    const auto [collection, split] = data::generate_synthetic(config);
    for (const LifeTest& lt : collection.devices) {
        for (std::size_t c = 1; c < lt.checkups.size(); ++c) {
            CHECK(*lt.checkups[c].indicators.i_lim < *lt.checkups[c - 1].indicators.i_lim);
            CHECK(*lt.checkups[c].indicators.r_o2_total >
                  *lt.checkups[c - 1].indicators.r_o2_total);
            CHECK(*lt.checkups[c].indicators.ecsa < *lt.checkups[c - 1].indicators.ecsa);
            CHECK(*lt.checkups[c].indicators.i_cross > *lt.checkups[c - 1].indicators.i_cross);
        }
    }
}

TEST_CASE("split respects lists, exclusions, and check-up granularity", "[data][split]") {
    data::SynthConfig config;
    config.device_count = 6;
    config.test_count = 0;
    config.seed = 15;
    auto [collection, unused] = data::generate_synthetic(config);

    SplitSpec spec;
    spec.train_ids = {"cell_01", "cell_02", "cell_03"};
    spec.test_ids = {"cell_04", "cell_05"};
    spec.exclusions = {"cell_06"};
    const auto [train, test] = data::split(collection, spec);
    CHECK(train.size() == 3);
    CHECK(test.size() == 2);

    SplitSpec bad;
    bad.train_ids = {"cell_99"};
    CHECK_THROWS_MATCHES(data::split(collection, bad), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::UnknownId; }));

    SplitSpec overlap;
    overlap.train_ids = {"cell_01"};
    overlap.test_ids = {"cell_01:s02"};
    CHECK_THROWS_MATCHES(data::split(collection, overlap), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::ValidationError; }));

    // per-check-up split of a single device
    SplitSpec per_checkup;
    per_checkup.train_ids = {"cell_01:s00", "cell_01:s01", "cell_01:s02"};
    per_checkup.test_ids = {"cell_01:s03", "cell_01:s04"};
    const auto [ctrain, ctest] = data::split(collection, per_checkup);
    REQUIRE(ctrain.size() == 1);
    REQUIRE(ctest.size() == 1);
    CHECK(ctrain[0].checkups.size() == 3);
    CHECK(ctest[0].checkups.size() == 2);
}

TEST_CASE("anodic branch extraction keeps the final ascending sweep", "[data][adapter]") {
    // two triangular cycles; the last ascending run is the second cycle's
    Eigen::VectorXd v(9), i(9);
    v << 0.1, 0.5, 0.9, 0.5, 0.1, 0.52, 0.9, 0.5, 0.1;
    i << 1, 2, 3, 2.5, 1.2, 2.2, 3.3, 2.6, 1.1;
    const auto [vb, ib] = data::anodic_branch(v, i);
    REQUIRE(vb.size() == 3);  // low vertex through the second anodic sweep
    CHECK(vb[0] == 0.1);
    CHECK(vb[1] == 0.52);
    CHECK(vb[2] == 0.9);
    CHECK(ib[0] == 1.2);
    CHECK(ib[2] == 3.3);

    // sweep that ends ascending: take the trailing run
    Eigen::VectorXd v2(5), i2(5);
    v2 << 0.9, 0.4, 0.1, 0.5, 0.8;
    i2 << 3, 2, 1, 2, 3;
    const auto [vb2, ib2] = data::anodic_branch(v2, i2);
    REQUIRE(vb2.size() == 3);
    CHECK(vb2[0] == 0.1);
    CHECK(vb2[2] == 0.8);
}

TEST_CASE("adapter converts a raw layout via its config", "[data][adapter]") {
    const fs::path dir = temp_dir("adapter");
    const fs::path raw = dir / "raw";
    fs::create_directories(raw);

    // raw EIS in ohms with odd column names and semicolon delimiters
    std::ofstream(raw / "z0.csv") << "freq;ReZ_ohm;ImZ_ohm\n"
                                     "10;0.05;-0.004\n"
                                     "1;0.06;-0.002\n"
                                     "100;0.04;-0.006\n";
    // raw CV loop: two cycles, needs branch extraction
    std::ofstream(raw / "cv0.csv") << "volt,amps\n"
                                      "0.1,1\n0.3,2\n0.5,3\n0.3,2.4\n0.1,1.2\n"
                                      "0.3,2.1\n0.5,3.1\n";
    std::ofstream(dir / "adapter.json") << R"({
      "device_class": "PEMFC",
      "devices": [{
        "device_id": "cell_raw",
        "checkups": [{
          "stage_id": "s00", "stage_time": 0, "stage_time_unit": "cycles",
          "eis": {"path": "z0.csv", "delimiter": ";",
                  "columns": {"frequency_hz": "freq", "re_mohm_cm2": "ReZ_ohm",
                               "im_mohm_cm2": "ImZ_ohm"},
                  "scale": {"re_mohm_cm2": 1000, "im_mohm_cm2": 1000}},
          "cv": {"path": "cv0.csv", "anodic_branch": true,
                 "columns": {"voltage_v": "volt", "current_density_a_cm2": "amps"}},
          "indicators": {"ecsa": 55.5}
        }]
      }],
      "split": {"train_ids": ["cell_raw"], "test_ids": [], "exclusions": []}
    })";

    const fs::path manifest = data::ingest_dataset(dir / "adapter.json", raw, dir / "out");
    const auto [collection, split] = data::load_dataset(manifest);
    REQUIRE(collection.devices.size() == 1);
    const CheckUp& cu = collection.devices[0].checkups[0];
    REQUIRE(cu.eis.has_value());
    // sorted ascending and scaled to mOhm*cm^2
    CHECK(cu.eis->frequencies_hz[0] == 1.0);
    CHECK(cu.eis->re[0] == 60.0);
    CHECK(cu.eis->im[2] == -6.0);
    REQUIRE(cu.cv.has_value());
    CHECK(cu.cv->x.size() == 3);  // final anodic sweep from the low vertex
    CHECK(cu.cv->x[0] == 0.1);
    CHECK(cu.cv->y[0] == 1.2);
    CHECK(cu.cv->y[2] == 3.1);
    CHECK(*cu.indicators.ecsa == 55.5);
    CHECK(split.train_ids == std::vector<std::string>{"cell_raw"});
}

TEST_CASE("synth config files reject unknown keys", "[data][config]") {
    const fs::path dir = temp_dir("synthcfg");
    std::ofstream(dir / "bad.json") << R"({"device_count": 3, "typo_key": 1})";
    CHECK_THROWS_MATCHES(data::synth_config_from_json_file(dir / "bad.json"), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::ConfigError; }));
    std::ofstream(dir / "ok.json") << R"({"device_count": 3, "test_count": 1, "seed": 9})";
    const data::SynthConfig config = data::synth_config_from_json_file(dir / "ok.json");
    CHECK(config.device_count == 3);
    CHECK(config.seed == 9);
}
