// lifetest: command-line runner for the synthetic generator, dataset
// adapters, and the PCDP / LP-ALT pipelines. Every run writes a
// run_manifest.json (config echo, seed, version, timing) into its output
// directory; evaluation runs additionally write metrics.json and
// plot-ready CSVs. All randomness flows from --seed.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/data/adapter.hpp"
#include "lifetest/data/dataset.hpp"
#include "lifetest/data/synthetic.hpp"
#include "lifetest/lpalt/lpalt.hpp"
#include "lifetest/pcdp/pcdp.hpp"
#include "lifetest/util/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lifetest;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ForestFlags {
    int trees = 200;
    int depth = 12;
    int leaf = 1;
    std::string max_features = "all";
    double bootstrap = 1.0;
    bool grid_search = false;
    int folds = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--trees", trees, "forest size when grid search is off");
        cmd->add_option("--depth", depth, "tree depth limit");
        cmd->add_option("--leaf", leaf, "min samples per leaf");
        cmd->add_option("--max-features", max_features, "all|sqrt|<fraction>");
        cmd->add_option("--bootstrap", bootstrap, "bootstrap fraction in (0,1]");
        cmd->add_flag("--grid-search", grid_search,
                      "tune hyperparameters by exhaustive cross-validated search");
        cmd->add_option("--folds", folds, "cross-validation folds");
    }

    forest::ForestParams params() const {
        forest::ForestParams p;
        p.n_estimators = trees;
        p.tree.max_depth = depth;
        p.tree.min_samples_leaf = leaf;
        p.tree.max_features = forest::MaxFeatures::parse(max_features);
        p.tree.bootstrap_fraction = bootstrap;
        return p;
    }
};

StageSelector parse_selector(const std::string& text) {
    if (text.rfind("id=", 0) == 0) return StageSelector::by_id(text.substr(3));
    return StageSelector::by_time(csv::parse_double(text, "stage selector"));
}

void write_json_file(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        raise(Errc::IoError, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

struct RunManifest {
    json config = json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const fs::path& out_dir, const std::string& command) const {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        json j{{"tool", "lifetest"},
               {"version", kVersion},
               {"command", command},
               {"config", config},
               {"duration_ms", elapsed}};
        write_json_file(out_dir / "run_manifest.json", j);
    }
};

json metrics_to_json(const std::vector<pcdp::EvalEntry>& entries) {
    json out = json::array();
    for (const pcdp::EvalEntry& entry : entries) {
        json row{{"output", entry.output},
                 {"source", entry.source},
                 {"unit", entry.unit},
                 {"n", entry.metrics.n},
                 {"mae", entry.metrics.mae},
                 {"rmse", entry.metrics.rmse}};
        row["mape_percent"] =
            entry.metrics.mape_percent ? json(*entry.metrics.mape_percent) : json(nullptr);
        row["r2"] = entry.metrics.r2 ? json(*entry.metrics.r2) : json(nullptr);
        out.push_back(std::move(row));
    }
    return out;
}

void write_scatter_csvs(const std::map<std::string, std::vector<pcdp::ScatterPoint>>& scatter,
                        const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& [key, points] : scatter) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '/', '_');
        std::ofstream out(dir / (name + ".csv"));
        if (!out)
            raise(Errc::IoError, "cannot write scatter CSV for " + key);
        out << "y_true,y_pred,ref\n";
        for (const pcdp::ScatterPoint& p : points)
            out << csv::format_double(p.y_true) << "," << csv::format_double(p.y_pred) << ","
                << p.device_ref << "\n";
    }
}

std::vector<CheckUp> side_checkups(const data::Collection& collection, const SplitSpec& spec,
                                   bool test_side) {
    auto [train, test] = data::split(collection, spec);
    return data::all_checkups(test_side ? test : train);
}

// ---------------------------------------------------------------------------
// subcommand runners
// ---------------------------------------------------------------------------

int run_synth(const fs::path& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed) {
    RunManifest run;
    data::SynthConfig config = data::synth_config_from_json_file(config_path);
    if (seed) config.seed = *seed;  // the flag wins over the config file
    run.config = {{"config_file", config_path.string()},
                  {"out", out_dir.string()},
                  {"seed", config.seed}};
    auto [collection, split] = data::generate_synthetic(config);
    const fs::path manifest = data::write_dataset(collection, split, out_dir);
    run.write(out_dir, "synth");
    std::cout << "wrote " << manifest.string() << " (" << collection.devices.size()
              << " devices)\n";
    return 0;
}

int run_ingest(const fs::path& adapter, const fs::path& raw, const fs::path& out_dir) {
    RunManifest run;
    run.config = {{"adapter", adapter.string()}, {"raw", raw.string()}, {"out", out_dir.string()}};
    const fs::path manifest = data::ingest_dataset(adapter, raw, out_dir);
    run.write(out_dir, "ingest");
    std::cout << "wrote " << manifest.string() << "\n";
    return 0;
}

int run_pcdp_train(const fs::path& manifest, const fs::path& out_dir, std::uint64_t seed,
                   const ForestFlags& flags, int threads) {
    RunManifest run;
    auto [collection, split_spec] = data::load_dataset(manifest);
    const std::vector<CheckUp> train = side_checkups(collection, split_spec, false);

    pcdp::PcdpTrainConfig config;
    config.seed = seed;
    config.base_params = flags.params();
    config.cv_folds = flags.folds;
    config.threads = threads;
    if (flags.grid_search) config.hyper_grid = forest::HyperGrid::default_grid();

    const pcdp::PcdpModelBundle bundle = pcdp::train_pcdp(train, config);
    pcdp::save_pcdp_bundle(bundle, out_dir);

    run.config = {{"manifest", manifest.string()}, {"out", out_dir.string()},
                  {"seed", seed},                  {"grid_search", flags.grid_search},
                  {"threads", threads},            {"training_rows", train.size()}};
    run.write(out_dir, "pcdp train");
    std::cout << "preset frequencies: " << csv::format_double(bundle.preset.f_medium) << " Hz / "
              << csv::format_double(bundle.preset.f_high) << " Hz\n"
              << "bundle written to " << out_dir.string() << "\n";
    return 0;
}

int run_pcdp_predict(const fs::path& bundle_dir, const fs::path& manifest,
                     const fs::path& out_dir) {
    RunManifest run;
    const pcdp::PcdpModelBundle bundle = pcdp::load_pcdp_bundle(bundle_dir);
    auto [collection, split_spec] = data::load_dataset(manifest);
    auto [train, test] = data::split(collection, split_spec);

    int rows = 0;
    for (const LifeTest& device : test) {
        for (const CheckUp& cu : device.checkups) {
            if (!cu.eis) continue;
            const pcdp::ProbeVector probe = pcdp::probe_impedances(*cu.eis, bundle.preset);
            const pcdp::PcdpPrediction pred = pcdp::predict_pcdp(bundle, probe);
            const fs::path dir = out_dir / device.device_id / cu.stage_id;
            fs::create_directories(dir);
            csv::write_columns(dir / "eis.csv",
                               {"frequency_hz", "re_mohm_cm2", "im_mohm_cm2"},
                               {pred.eis.frequencies_hz, pred.eis.re, pred.eis.im});
            for (const SampledCurve& curve : pred.curves) {
                if (curve.kind == CurveKind::IV)
                    csv::write_columns(dir / "iv.csv", {"current_density_a_cm2", "voltage_v"},
                                       {curve.x, curve.y});
                else
                    csv::write_columns(dir / (std::string(curve_kind_name(curve.kind)) + ".csv"),
                                       {"voltage_v", "current_density_a_cm2"},
                                       {curve.x, curve.y});
            }
            std::ofstream ind(dir / "indicators.csv");
            ind << "indicator,value,source\n";
            auto emit = [&](const char* name, const std::optional<double>& v) {
                if (v) ind << name << "," << csv::format_double(*v) << ",predicted\n";
            };
            emit("i_lim", pred.indicators.i_lim);
            emit("r_o2_total", pred.indicators.r_o2_total);
            emit("ecsa", pred.indicators.ecsa);
            emit("i_cross", pred.indicators.i_cross);
            emit("c_rem", pred.indicators.c_rem);
            ++rows;
        }
    }
    run.config = {{"bundle", bundle_dir.string()},
                  {"manifest", manifest.string()},
                  {"out", out_dir.string()},
                  {"rows", rows}};
    run.write(out_dir, "pcdp predict");
    std::cout << "predicted " << rows << " check-ups\n";
    return 0;
}

int run_pcdp_evaluate(const fs::path& bundle_dir, const fs::path& manifest,
                      const fs::path& out_dir) {
    RunManifest run;
    const pcdp::PcdpModelBundle bundle = pcdp::load_pcdp_bundle(bundle_dir);
    auto [collection, split_spec] = data::load_dataset(manifest);
    const std::vector<CheckUp> test = side_checkups(collection, split_spec, true);
    const pcdp::PcdpEvaluation eval = pcdp::evaluate_pcdp(bundle, test);

    json metrics{{"format", "lifetest-metrics"},
                 {"format_version", 1},
                 {"pipeline", "pcdp"},
                 {"preset",
                  {{"f_medium", bundle.preset.f_medium}, {"f_high", bundle.preset.f_high}}},
                 {"entries", metrics_to_json(eval.entries)}};
    write_json_file(out_dir / "metrics.json", metrics);
    write_scatter_csvs(eval.scatter, out_dir / "plots");
    run.config = {{"bundle", bundle_dir.string()},
                  {"manifest", manifest.string()},
                  {"out", out_dir.string()}};
    run.write(out_dir, "pcdp evaluate");
    std::cout << "metrics written to " << (out_dir / "metrics.json").string() << "\n";
    return 0;
}

int run_lpalt_train(const fs::path& manifest, const fs::path& out_dir, std::uint64_t seed,
                    const std::string& t1, const std::string& t2, const std::string& t3,
                    const ForestFlags& flags, const sisso::SissoConfig& sisso_config,
                    int threads) {
    RunManifest run;
    auto [collection, split_spec] = data::load_dataset(manifest);
    auto [train, test] = data::split(collection, split_spec);

    StageSpec stages{parse_selector(t1), parse_selector(t2), parse_selector(t3)};
    lpalt::LpAltConfig config;
    config.seed = seed;
    config.sisso = sisso_config;
    config.sisso.seed = seed;
    config.base_params = flags.params();
    config.cv_folds = flags.folds;
    config.threads = threads;
    if (flags.grid_search) config.hyper_grid = forest::HyperGrid::default_grid();

    const lpalt::LpAltModelBundle bundle = lpalt::train_lpalt(train, stages, config);
    lpalt::save_lpalt_bundle(bundle, out_dir);

    run.config = {{"manifest", manifest.string()}, {"out", out_dir.string()},
                  {"seed", seed},                  {"t1", t1},
                  {"t2", t2},                      {"t3", t3},
                  {"grid_search", flags.grid_search}, {"threads", threads}};
    run.write(out_dir, "lpalt train");
    for (const lpalt::IndicatorHead& head : bundle.heads) {
        std::cout << head.indicator << ": " << head.training_rows << " rows";
        for (const sisso::FeatureFormula& formula : head.formulas)
            std::cout << "  [" << curve_kind_name(formula.grid.kind) << "] " << formula.str();
        std::cout << "\n";
    }
    std::cout << "bundle written to " << out_dir.string() << "\n";
    return 0;
}

int run_lpalt_predict(const fs::path& bundle_dir, const fs::path& manifest,
                      const fs::path& out_dir) {
    RunManifest run;
    const lpalt::LpAltModelBundle bundle = lpalt::load_lpalt_bundle(bundle_dir);
    auto [collection, split_spec] = data::load_dataset(manifest);
    auto [train, test] = data::split(collection, split_spec);

    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "predictions.csv");
    out << "device_id,indicator,t1_value,delta_hat,t3_hat\n";
    int rows = 0;
    for (const LifeTest& device : test) {
        const lpalt::LpAltPrediction pred = lpalt::predict_lpalt(bundle, device);
        const CheckUp& t1 = resolve_stage(device, bundle.stages.t1);
        auto emit = [&](const char* name, const std::optional<double>& t3_hat,
                        const std::optional<double>& delta, const std::optional<double>& t1v) {
            if (!t3_hat) return;
            out << device.device_id << "," << name << "," << csv::format_double(*t1v) << ","
                << csv::format_double(*delta) << "," << csv::format_double(*t3_hat) << "\n";
            ++rows;
        };
        emit("i_lim", pred.t3_estimate.i_lim, pred.delta.i_lim, t1.indicators.i_lim);
        emit("r_o2_total", pred.t3_estimate.r_o2_total, pred.delta.r_o2_total,
             t1.indicators.r_o2_total);
        emit("ecsa", pred.t3_estimate.ecsa, pred.delta.ecsa, t1.indicators.ecsa);
        emit("c_rem", pred.t3_estimate.c_rem, pred.delta.c_rem, t1.indicators.c_rem);
    }
    run.config = {{"bundle", bundle_dir.string()},
                  {"manifest", manifest.string()},
                  {"out", out_dir.string()},
                  {"rows", rows}};
    run.write(out_dir, "lpalt predict");
    std::cout << "wrote " << rows << " predictions\n";
    return 0;
}

int run_lpalt_evaluate(const fs::path& bundle_dir, const fs::path& manifest,
                       const fs::path& out_dir, std::optional<double> horizon) {
    RunManifest run;
    const lpalt::LpAltModelBundle bundle = lpalt::load_lpalt_bundle(bundle_dir);
    auto [collection, split_spec] = data::load_dataset(manifest);
    auto [train, test] = data::split(collection, split_spec);
    const lpalt::LpAltEvaluation eval = lpalt::evaluate_lpalt(bundle, test);

    double horizon_value = 0.0;
    if (horizon)
        horizon_value = *horizon;
    else if (bundle.stages.t3.stage_time)
        horizon_value = *bundle.stages.t3.stage_time;
    else
        raise(Errc::ConfigError, "horizon unknown: pass --horizon or use a numeric t3 selector");
    const lpalt::AccelerationRecord record =
        lpalt::acceleration_report(bundle.stages, horizon_value, "", eval.entries);

    json metrics{{"format", "lifetest-metrics"},
                 {"format_version", 1},
                 {"pipeline", "lpalt"},
                 {"acceleration",
                  {{"t1_time", record.t1_time},
                   {"t2_time", record.t2_time},
                   {"horizon", record.horizon},
                   {"ratio", record.ratio}}},
                 {"entries", metrics_to_json(eval.entries)}};
    write_json_file(out_dir / "metrics.json", metrics);
    write_scatter_csvs(eval.scatter, out_dir / "plots");
    run.config = {{"bundle", bundle_dir.string()},
                  {"manifest", manifest.string()},
                  {"out", out_dir.string()},
                  {"horizon", horizon_value}};
    run.write(out_dir, "lpalt evaluate");
    std::cout << "acceleration ratio " << record.ratio << "; metrics written to "
              << (out_dir / "metrics.json").string() << "\n";
    return 0;
}

int run_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
    RunManifest run;
    json merged{{"format", "lifetest-report"}, {"format_version", 1}};
    json runs = json::array();
    fs::create_directories(out_dir);
    std::ofstream table(out_dir / "entries.csv");
    table << "run,pipeline,output,source,n,mae,rmse,mape_percent,r2,unit\n";
    for (const fs::path& input : inputs) {
        std::ifstream in(input);
        if (!in)
            raise(Errc::ParseError, "cannot open " + input.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            raise(Errc::ParseError, input.string() + ": " + e.what());
        }
        runs.push_back({{"path", input.string()}, {"metrics", j}});
        for (const json& entry : j.value("entries", json::array())) {
            table << input.filename().string() << "," << j.value("pipeline", "?") << ","
                  << entry.at("output").get<std::string>() << ","
                  << entry.at("source").get<std::string>() << "," << entry.at("n") << ","
                  << entry.at("mae") << "," << entry.at("rmse") << ","
                  << (entry.at("mape_percent").is_null() ? json("") : entry.at("mape_percent"))
                  << "," << (entry.at("r2").is_null() ? json("") : entry.at("r2")) << ","
                  << entry.at("unit").get<std::string>() << "\n";
        }
    }
    merged["runs"] = std::move(runs);
    write_json_file(out_dir / "report.json", merged);
    json cfg = json::array();
    for (const fs::path& p : inputs) cfg.push_back(p.string());
    run.config = {{"inputs", cfg}, {"out", out_dir.string()}};
    run.write(out_dir, "report");
    std::cout << "report written to " << (out_dir / "report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"life-test acceleration pipelines (synthetic data, PCDP, LP-ALT)"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    fs::path synth_config, synth_out;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--config", synth_config, "SynthConfig JSON")->required();
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--seed", synth_seed, "master seed (overrides the config file)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "convert a raw dataset via an adapter config");
    fs::path ingest_adapter, ingest_raw, ingest_out;
    ingest->add_option("--adapter", ingest_adapter, "adapter config JSON")->required();
    ingest->add_option("--raw", ingest_raw, "raw dataset root")->required();
    ingest->add_option("--out", ingest_out, "output dataset directory")->required();

    // pcdp
    auto* pcdp_cmd = app.add_subcommand("pcdp", "performance-characterization-data prediction");
    pcdp_cmd->require_subcommand(1);
    fs::path pcdp_manifest, pcdp_out, pcdp_bundle;
    std::uint64_t pcdp_seed = 0;
    int pcdp_threads = 1;
    ForestFlags pcdp_flags;
    auto* pcdp_train = pcdp_cmd->add_subcommand("train", "train a PCDP bundle");
    pcdp_train->add_option("--manifest", pcdp_manifest, "dataset manifest")->required();
    pcdp_train->add_option("--out", pcdp_out, "bundle output directory")->required();
    pcdp_train->add_option("--seed", pcdp_seed, "master seed")->required();
    pcdp_train->add_option("--threads", pcdp_threads, "worker threads");
    pcdp_flags.attach(pcdp_train);
    auto* pcdp_predict = pcdp_cmd->add_subcommand("predict", "predict the test split");
    pcdp_predict->add_option("--bundle", pcdp_bundle, "bundle directory")->required();
    pcdp_predict->add_option("--manifest", pcdp_manifest, "dataset manifest")->required();
    pcdp_predict->add_option("--out", pcdp_out, "prediction output directory")->required();
    auto* pcdp_eval = pcdp_cmd->add_subcommand("evaluate", "evaluate on the test split");
    pcdp_eval->add_option("--bundle", pcdp_bundle, "bundle directory")->required();
    pcdp_eval->add_option("--manifest", pcdp_manifest, "dataset manifest")->required();
    pcdp_eval->add_option("--out", pcdp_out, "metrics output directory")->required();

    // lpalt
    auto* lpalt_cmd = app.add_subcommand("lpalt", "life-prediction-driven accelerated testing");
    lpalt_cmd->require_subcommand(1);
    fs::path lpalt_manifest, lpalt_out, lpalt_bundle;
    std::uint64_t lpalt_seed = 0;
    int lpalt_threads = 1;
    std::string t1 = "0", t2, t3;
    std::optional<double> horizon;
    ForestFlags lpalt_flags;
    sisso::SissoConfig sisso_config;
    auto* lpalt_train = lpalt_cmd->add_subcommand("train", "train an LP-ALT bundle");
    lpalt_train->add_option("--manifest", lpalt_manifest, "dataset manifest")->required();
    lpalt_train->add_option("--out", lpalt_out, "bundle output directory")->required();
    lpalt_train->add_option("--seed", lpalt_seed, "master seed")->required();
    lpalt_train->add_option("--t1", t1, "t1 stage selector (time or id=<stage>)");
    lpalt_train->add_option("--t2", t2, "t2 stage selector")->required();
    lpalt_train->add_option("--t3", t3, "t3 stage selector")->required();
    lpalt_train->add_option("--threads", lpalt_threads, "worker threads");
    lpalt_train->add_option("--sisso-k", sisso_config.k, "max distinct primitive features");
    lpalt_train->add_option("--sisso-rounds", sisso_config.n_expansion, "expansion rounds");
    lpalt_train->add_option("--screen-size", sisso_config.screen_size,
                            "survivors per screening pass");
    lpalt_flags.attach(lpalt_train);
    auto* lpalt_predict = lpalt_cmd->add_subcommand("predict", "predict the test split");
    lpalt_predict->add_option("--bundle", lpalt_bundle, "bundle directory")->required();
    lpalt_predict->add_option("--manifest", lpalt_manifest, "dataset manifest")->required();
    lpalt_predict->add_option("--out", lpalt_out, "prediction output directory")->required();
    auto* lpalt_eval = lpalt_cmd->add_subcommand("evaluate", "evaluate on the test split");
    lpalt_eval->add_option("--bundle", lpalt_bundle, "bundle directory")->required();
    lpalt_eval->add_option("--manifest", lpalt_manifest, "dataset manifest")->required();
    lpalt_eval->add_option("--out", lpalt_out, "metrics output directory")->required();
    lpalt_eval->add_option("--horizon", horizon, "full-test horizon (defaults to the t3 time)");

    // report
    auto* report = app.add_subcommand("report", "merge metrics files into one report");
    std::vector<fs::path> report_inputs;
    fs::path report_out;
    report->add_option("--inputs", report_inputs, "metrics.json files")->required();
    report->add_option("--out", report_out, "report output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return run_synth(synth_config, synth_out, synth_seed);
        if (ingest->parsed()) return run_ingest(ingest_adapter, ingest_raw, ingest_out);
        if (pcdp_cmd->parsed()) {
            if (pcdp_train->parsed())
                return run_pcdp_train(pcdp_manifest, pcdp_out, pcdp_seed, pcdp_flags,
                                      pcdp_threads);
            if (pcdp_predict->parsed())
                return run_pcdp_predict(pcdp_bundle, pcdp_manifest, pcdp_out);
            if (pcdp_eval->parsed())
                return run_pcdp_evaluate(pcdp_bundle, pcdp_manifest, pcdp_out);
        }
        if (lpalt_cmd->parsed()) {
            if (lpalt_train->parsed())
                return run_lpalt_train(lpalt_manifest, lpalt_out, lpalt_seed, t1, t2, t3,
                                       lpalt_flags, sisso_config, lpalt_threads);
            if (lpalt_predict->parsed())
                return run_lpalt_predict(lpalt_bundle, lpalt_manifest, lpalt_out);
            if (lpalt_eval->parsed())
                return run_lpalt_evaluate(lpalt_bundle, lpalt_manifest, lpalt_out, horizon);
        }
        if (report->parsed()) return run_report(report_inputs, report_out);
    } catch (const Error& e) {
        std::cerr << json{{"error", errc_name(e.code())}, {"message", e.message()}}.dump()
                  << "\n";
        return errc_exit_class(e.code());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 2;
}
