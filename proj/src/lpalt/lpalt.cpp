#include "lifetest/lpalt/lpalt.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/forest/serialize.hpp"
#include "lifetest/numerics/curve_ops.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::lpalt {

using nlohmann::json;

namespace {

bool grids_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

/// Which delta curves feed each indicator's descriptor(s).
std::vector<CurveKind> indicator_sources(const std::string& indicator) {
    if (indicator == "i_lim") return {CurveKind::DeltaVI};
    if (indicator == "ecsa") return {CurveKind::DeltaIV};
    if (indicator == "r_o2_total" || indicator == "c_rem")
        return {CurveKind::DeltaReF, CurveKind::DeltaImF};
    raise(Errc::ConfigError, "no descriptor sources for indicator '" + indicator + "'");
}

const std::optional<SampledCurve>& delta_by_kind(const DifferenceCurveSet& deltas,
                                                 CurveKind kind) {
    switch (kind) {
        case CurveKind::DeltaVI: return deltas.delta_vi;
        case CurveKind::DeltaIV: return deltas.delta_iv;
        case CurveKind::DeltaReF: return deltas.delta_re;
        case CurveKind::DeltaImF: return deltas.delta_im;
        default: raise(Errc::ConfigError, "not a delta curve kind");
    }
}

std::optional<double> indicator_value(const AgingIndicators& ind, const std::string& name) {
    if (name == "i_lim") return ind.i_lim;
    if (name == "r_o2_total") return ind.r_o2_total;
    if (name == "ecsa") return ind.ecsa;
    if (name == "i_cross") return ind.i_cross;
    if (name == "c_rem") return ind.c_rem;
    return std::nullopt;
}

void set_indicator(AgingIndicators& ind, const std::string& name, double value) {
    if (name == "i_lim") ind.i_lim = value;
    else if (name == "r_o2_total") ind.r_o2_total = value;
    else if (name == "ecsa") ind.ecsa = value;
    else if (name == "i_cross") ind.i_cross = value;
    else if (name == "c_rem") ind.c_rem = value;
}

const char* indicator_units(const std::string& name) {
    if (name == "i_lim" || name == "i_cross") return "A_cm2";
    if (name == "r_o2_total") return "s_m";
    if (name == "ecsa") return "cm2Pt_cm2geo";
    if (name == "c_rem") return "uF";
    return "?";
}

const char* kLpAltIndicators[] = {"i_lim", "r_o2_total", "ecsa", "c_rem"};

}  // namespace

DifferenceCurveSet build_difference_curves(const CheckUp& t1, const CheckUp& t2,
                                           const LpAltGrids& grids) {
    DifferenceCurveSet out;

    auto standardize_pair = [&](const std::optional<SampledCurve>& a,
                                const std::optional<SampledCurve>& b, const GridSpec& grid,
                                const char* name)
        -> std::optional<std::pair<SampledCurve, SampledCurve>> {
        if (!a || !b) {
            out.notes.push_back(std::string(name) + " absent: PCD missing at a stage");
            return std::nullopt;
        }
        return std::make_pair(numerics::resample_curve(*a, grid),
                              numerics::resample_curve(*b, grid));
    };

    if (const auto iv = standardize_pair(t1.iv, t2.iv, grids.iv, "delta_vi")) {
        out.delta_vi = make_curve(CurveKind::DeltaVI, iv->first.x,
                                  (iv->second.y - iv->first.y).eval());
    }
    if (const auto cv = standardize_pair(t1.cv, t2.cv, grids.cv, "delta_iv")) {
        // reversed sign: early minus late
        out.delta_iv = make_curve(CurveKind::DeltaIV, cv->first.x,
                                  (cv->first.y - cv->second.y).eval());
    }
    if (t1.eis && t2.eis) {
        if (!grids_equal(t1.eis->frequencies_hz, t2.eis->frequencies_hz))
            raise(Errc::FrequencyGridMismatch,
                  "EIS frequency grids differ between the two stages");
        out.delta_re = make_curve(CurveKind::DeltaReF, t1.eis->frequencies_hz,
                                  (t2.eis->re - t1.eis->re).eval());
        out.delta_im = make_curve(CurveKind::DeltaImF, t1.eis->frequencies_hz,
                                  (t2.eis->im - t1.eis->im).eval());
    } else {
        out.notes.push_back("delta_re/delta_im absent: EIS missing at a stage");
    }
    return out;
}

LpAltModelBundle train_lpalt(const std::vector<LifeTest>& train, const StageSpec& stages,
                             const LpAltConfig& config) {
    LpAltModelBundle bundle;
    bundle.stages = stages;
    bundle.grids = config.grids;
    bundle.config = config;

    struct DeviceRow {
        const LifeTest* device;
        DifferenceCurveSet deltas;
        const CheckUp* t1;
        const CheckUp* t3;
    };
    std::vector<DeviceRow> rows;
    for (const LifeTest& device : train) {
        try {
            const CheckUp& t1 = resolve_stage(device, stages.t1);
            const CheckUp& t2 = resolve_stage(device, stages.t2);
            const CheckUp& t3 = resolve_stage(device, stages.t3);
            rows.push_back({&device, build_difference_curves(t1, t2, config.grids), &t1, &t3});
        } catch (const Error& e) {
            bundle.log.messages.push_back("device " + device.device_id + " skipped: " + e.what());
        }
    }
    if (rows.empty())
        raise(Errc::NoTrainingRows, "no training device has resolvable stages");

    std::size_t head_index = 0;
    for (const char* indicator : kLpAltIndicators) {
        const std::vector<CurveKind> sources = indicator_sources(indicator);

        // rows usable for this indicator: all source deltas plus t1/t3 values
        std::vector<const DeviceRow*> usable;
        for (const DeviceRow& row : rows) {
            const bool has_truth = indicator_value(row.t1->indicators, indicator) &&
                                   indicator_value(row.t3->indicators, indicator);
            bool has_curves = true;
            for (const CurveKind kind : sources)
                has_curves &= delta_by_kind(row.deltas, kind).has_value();
            if (has_truth && has_curves) usable.push_back(&row);
        }
        bundle.log.skipped_rows[std::string("lpalt_") + indicator + "_unusable"] =
            static_cast<int>(rows.size() - usable.size());
        if (usable.empty()) {
            ++head_index;
            continue;
        }

        Eigen::VectorXd target(static_cast<Eigen::Index>(usable.size()));
        for (std::size_t r = 0; r < usable.size(); ++r)
            target[static_cast<Eigen::Index>(r)] =
                *indicator_value(usable[r]->t3->indicators, indicator) -
                *indicator_value(usable[r]->t1->indicators, indicator);

        IndicatorHead head;
        head.indicator = indicator;
        head.training_rows = static_cast<int>(usable.size());
        Eigen::MatrixXd X(static_cast<Eigen::Index>(usable.size()),
                          static_cast<Eigen::Index>(sources.size()));
        bool sisso_ok = true;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            std::vector<SampledCurve> curves;
            for (const DeviceRow* row : usable)
                curves.push_back(*delta_by_kind(row->deltas, sources[s]));
            try {
                const sisso::CandidateFeatureSet candidates =
                    sisso::enumerate_two_point_features(curves);
                const sisso::FeatureFormula formula =
                    sisso::fit_formula(candidates, target, config.sisso);
                for (std::size_t r = 0; r < curves.size(); ++r)
                    X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
                        sisso::evaluate_formula(formula, curves[r]);
                head.formulas.push_back(formula);
            } catch (const Error& e) {
                bundle.log.messages.push_back(std::string("indicator '") + indicator +
                                              "' descriptor search failed: " + e.what());
                sisso_ok = false;
                break;
            }
        }
        if (!sisso_ok) {
            ++head_index;
            continue;
        }

        forest::ForestParams params = config.base_params;
        if (config.hyper_grid) {
            const forest::GridSearchResult result = forest::grid_search_cv(
                X, target, *config.hyper_grid, config.cv_folds,
                derive_seed(config.seed, head_index, 0x6e1d), config.threads);
            params = result.best;
            GridSearchSummary summary;
            summary.model = std::string("lpalt_") + indicator;
            summary.chosen = result.best;
            summary.combinations = config.hyper_grid->n_combinations();
            for (const auto& row : result.table)
                if (row.n_estimators == result.best.n_estimators &&
                    row.max_depth == result.best.tree.max_depth &&
                    row.min_samples_leaf == result.best.tree.min_samples_leaf &&
                    row.max_features == result.best.tree.max_features)
                    summary.mean_rmse = row.mean_rmse;
            bundle.tuning.push_back(std::move(summary));
        }
        params.seed = derive_seed(config.seed, head_index, 0xf0e);
        head.forest = forest::fit_forest(X, target, params, config.threads);
        bundle.heads.push_back(std::move(head));
        ++head_index;
    }
    if (bundle.heads.empty())
        raise(Errc::NoTrainingRows, "no indicator had usable training rows");
    return bundle;
}

LpAltPrediction predict_lpalt(const LpAltModelBundle& bundle, const LifeTest& device) {
    if (bundle.heads.empty())
        raise(Errc::ModelMissing, "bundle has no indicator heads");
    const CheckUp& t1 = resolve_stage(device, bundle.stages.t1);
    const CheckUp& t2 = resolve_stage(device, bundle.stages.t2);
    const DifferenceCurveSet deltas = build_difference_curves(t1, t2, bundle.grids);

    LpAltPrediction pred;
    for (const IndicatorHead& head : bundle.heads) {
        const std::vector<CurveKind> sources = indicator_sources(head.indicator);
        Eigen::RowVectorXd features(static_cast<Eigen::Index>(sources.size()));
        bool ok = true;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            const std::optional<SampledCurve>& delta = delta_by_kind(deltas, sources[s]);
            if (!delta) {
                ok = false;
                break;
            }
            features[static_cast<Eigen::Index>(s)] =
                sisso::evaluate_formula(head.formulas[s], *delta);
        }
        if (!ok) continue;  // required PCD absent; indicator left unset

        const std::optional<double> t1_value = indicator_value(t1.indicators, head.indicator);
        if (!t1_value)
            raise(Errc::MissingT1Indicator,
                  "device " + device.device_id + " lacks " + head.indicator + " at t1");
        const double delta_hat = forest::predict_row(head.forest, features);
        const double t3_hat = *t1_value + delta_hat;
        set_indicator(pred.t3_estimate, head.indicator, t3_hat);
        // reported so that t3_estimate - t1 == delta holds exactly
        set_indicator(pred.delta, head.indicator, t3_hat - *t1_value);
    }
    return pred;
}

LpAltEvaluation evaluate_lpalt(const LpAltModelBundle& bundle,
                               const std::vector<LifeTest>& test) {
    LpAltEvaluation eval;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pools;
    std::map<std::string, std::vector<std::string>> refs;

    for (const LifeTest& device : test) {
        LpAltPrediction pred;
        const CheckUp* t3 = nullptr;
        try {
            pred = predict_lpalt(bundle, device);
            t3 = &resolve_stage(device, bundle.stages.t3);
        } catch (const Error&) {
            continue;  // device not predictable; other devices still count
        }
        for (const IndicatorHead& head : bundle.heads) {
            const std::optional<double> truth = indicator_value(t3->indicators, head.indicator);
            const std::optional<double> estimate =
                indicator_value(pred.t3_estimate, head.indicator);
            if (!truth || !estimate) continue;
            pools[head.indicator].first.push_back(*truth);
            pools[head.indicator].second.push_back(*estimate);
            refs[head.indicator].push_back(device.device_id);
        }
    }

    for (const auto& [indicator, pool] : pools) {
        const auto n = static_cast<Eigen::Index>(pool.first.size());
        const Eigen::Map<const Eigen::VectorXd> t(pool.first.data(), n);
        const Eigen::Map<const Eigen::VectorXd> p(pool.second.data(), n);
        EvalEntry entry;
        entry.output = indicator;
        entry.source = "predicted";
        entry.unit = indicator_units(indicator);
        entry.metrics = numerics::compute_metrics_lenient(t, p);
        eval.entries.push_back(std::move(entry));
        std::vector<ScatterPoint>& scatter = eval.scatter[indicator + "/predicted"];
        for (Eigen::Index i = 0; i < n; ++i)
            scatter.push_back({pool.first[static_cast<std::size_t>(i)],
                               pool.second[static_cast<std::size_t>(i)],
                               refs[indicator][static_cast<std::size_t>(i)]});
    }
    if (eval.entries.empty())
        raise(Errc::NoGroundTruth, "no test device carries usable t3 ground truth");
    return eval;
}

AccelerationRecord acceleration_report(const StageSpec& stages, double horizon,
                                       const std::string& time_unit,
                                       std::vector<EvalEntry> metrics) {
    if (!stages.t2.stage_time)
        raise(Errc::ConfigError, "acceleration report needs a numeric t2 stage time");
    AccelerationRecord record;
    record.t1_time = stages.t1.stage_time.value_or(0.0);
    record.t2_time = *stages.t2.stage_time;
    record.horizon = horizon;
    record.time_unit = time_unit;
    if (record.t2_time == 0.0)
        raise(Errc::ZeroT2Time, "t2 stage time is zero");
    record.ratio = horizon / record.t2_time;
    record.metrics = std::move(metrics);
    return record;
}

// ---------------------------------------------------------------------------
// bundle archive
// ---------------------------------------------------------------------------

namespace {

json selector_to_json(const StageSelector& s) {
    json j = json::object();
    if (s.stage_id) j["stage_id"] = *s.stage_id;
    if (s.stage_time) j["stage_time"] = *s.stage_time;
    return j;
}

StageSelector selector_from_json(const json& j) {
    StageSelector s;
    if (j.contains("stage_id")) s.stage_id = j["stage_id"].get<std::string>();
    if (j.contains("stage_time")) s.stage_time = j["stage_time"].get<double>();
    return s;
}

json formula_to_json(const sisso::FeatureFormula& formula) {
    json terms = json::array();
    for (const sisso::FormulaTerm& term : formula.terms)
        terms.push_back({{"i", term.feature.i}, {"j", term.feature.j}, {"coeff", term.coeff}});
    std::vector<double> x(formula.grid.x.data(), formula.grid.x.data() + formula.grid.x.size());
    return json{{"kind", curve_kind_name(formula.grid.kind)},
                {"grid_x", std::move(x)},
                {"terms", std::move(terms)},
                {"slope", formula.slope},
                {"intercept", formula.intercept},
                {"train_r2", formula.train_r2},
                {"text", formula.str()}};
}

sisso::FeatureFormula formula_from_json(const json& j) {
    sisso::FeatureFormula formula;
    formula.grid.kind = curve_kind_from_name(j.at("kind").get<std::string>());
    const auto x = j.at("grid_x").get<std::vector<double>>();
    formula.grid.x =
        Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (const json& t : j.at("terms"))
        formula.terms.push_back({{t.at("i").get<std::int32_t>(), t.at("j").get<std::int32_t>()},
                                 t.at("coeff").get<std::int32_t>()});
    formula.slope = j.at("slope").get<double>();
    formula.intercept = j.at("intercept").get<double>();
    formula.train_r2 = j.at("train_r2").get<double>();
    return formula;
}

void write_json_file(const std::filesystem::path& path, const json& j, int indent = -1) {
    std::ofstream out(path);
    if (!out)
        raise(Errc::IoError, "cannot write " + path.string());
    out << j.dump(indent) << "\n";
    if (!out)
        raise(Errc::IoError, "write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::ParseError, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::ParseError, path.string() + ": " + e.what());
    }
    return j;
}

json grid_spec_to_json(const GridSpec& grid) {
    return json{{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n_points", grid.n_points}};
}

GridSpec grid_spec_from_json(const json& j) {
    return {j.at("x_min").get<double>(), j.at("x_max").get<double>(),
            j.at("n_points").get<int>()};
}

}  // namespace

void save_lpalt_bundle(const LpAltModelBundle& bundle, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "models", ec);
    if (ec)
        raise(Errc::IoError, "cannot create " + dir.string());

    json manifest;
    manifest["format"] = "lpalt-bundle";
    manifest["format_version"] = 1;
    manifest["stages"] = {{"t1", selector_to_json(bundle.stages.t1)},
                          {"t2", selector_to_json(bundle.stages.t2)},
                          {"t3", selector_to_json(bundle.stages.t3)}};
    manifest["grids"] = {{"iv", grid_spec_to_json(bundle.grids.iv)},
                         {"cv", grid_spec_to_json(bundle.grids.cv)}};
    manifest["config"] = {{"seed", bundle.config.seed},
                          {"cv_folds", bundle.config.cv_folds},
                          {"threads", bundle.config.threads},
                          {"base_params", forest::params_to_json(bundle.config.base_params)},
                          {"sisso",
                           {{"op_plus", bundle.config.sisso.op_plus},
                            {"op_minus", bundle.config.sisso.op_minus},
                            {"n_expansion", bundle.config.sisso.n_expansion},
                            {"k", bundle.config.sisso.k},
                            {"screen_size", bundle.config.sisso.screen_size},
                            {"seed", bundle.config.sisso.seed}}}};
    if (bundle.config.hyper_grid)
        manifest["config"]["hyper_grid"] = forest::grid_to_json(*bundle.config.hyper_grid);
    json tuning = json::array();
    for (const GridSearchSummary& t : bundle.tuning)
        tuning.push_back({{"model", t.model},
                          {"chosen", forest::params_to_json(t.chosen)},
                          {"mean_rmse", t.mean_rmse},
                          {"combinations", t.combinations}});
    manifest["tuning"] = std::move(tuning);
    manifest["log"] = {{"messages", bundle.log.messages},
                       {"skipped_rows", bundle.log.skipped_rows}};

    json heads = json::array();
    for (const IndicatorHead& head : bundle.heads) {
        const std::string file = "models/head_" + head.indicator + ".json";
        json formulas = json::array();
        for (const sisso::FeatureFormula& formula : head.formulas)
            formulas.push_back(formula_to_json(formula));
        write_json_file(dir / file, json{{"indicator", head.indicator},
                                         {"training_rows", head.training_rows},
                                         {"formulas", std::move(formulas)},
                                         {"forest", forest::forest_to_json(head.forest)}});
        heads.push_back({{"indicator", head.indicator}, {"file", file}});
    }
    manifest["heads"] = std::move(heads);
    write_json_file(dir / "manifest.json", manifest, 2);
}

LpAltModelBundle load_lpalt_bundle(const std::filesystem::path& dir) {
    const json manifest = read_json_file(dir / "manifest.json");
    LpAltModelBundle bundle;
    try {
        if (manifest.at("format").get<std::string>() != "lpalt-bundle")
            raise(Errc::SchemaError, "not a lpalt bundle");
        bundle.stages.t1 = selector_from_json(manifest.at("stages").at("t1"));
        bundle.stages.t2 = selector_from_json(manifest.at("stages").at("t2"));
        bundle.stages.t3 = selector_from_json(manifest.at("stages").at("t3"));
        bundle.grids.iv = grid_spec_from_json(manifest.at("grids").at("iv"));
        bundle.grids.cv = grid_spec_from_json(manifest.at("grids").at("cv"));
        const json& config = manifest.at("config");
        bundle.config.seed = config.at("seed").get<std::uint64_t>();
        bundle.config.cv_folds = config.at("cv_folds").get<int>();
        bundle.config.threads = config.at("threads").get<int>();
        bundle.config.base_params = forest::params_from_json(config.at("base_params"));
        const json& sc = config.at("sisso");
        bundle.config.sisso.op_plus = sc.at("op_plus").get<bool>();
        bundle.config.sisso.op_minus = sc.at("op_minus").get<bool>();
        bundle.config.sisso.n_expansion = sc.at("n_expansion").get<int>();
        bundle.config.sisso.k = sc.at("k").get<int>();
        bundle.config.sisso.screen_size = sc.at("screen_size").get<int>();
        bundle.config.sisso.seed = sc.at("seed").get<std::uint64_t>();
        if (config.contains("hyper_grid"))
            bundle.config.hyper_grid = forest::grid_from_json(config["hyper_grid"]);
        for (const json& t : manifest.at("tuning"))
            bundle.tuning.push_back({t.at("model").get<std::string>(),
                                     forest::params_from_json(t.at("chosen")),
                                     t.at("mean_rmse").get<double>(),
                                     t.at("combinations").get<std::size_t>()});
        bundle.log.messages = manifest.at("log").at("messages").get<std::vector<std::string>>();
        bundle.log.skipped_rows =
            manifest.at("log").at("skipped_rows").get<std::map<std::string, int>>();
        for (const json& h : manifest.at("heads")) {
            const json j = read_json_file(dir / h.at("file").get<std::string>());
            IndicatorHead head;
            head.indicator = j.at("indicator").get<std::string>();
            head.training_rows = j.at("training_rows").get<int>();
            for (const json& f : j.at("formulas"))
                head.formulas.push_back(formula_from_json(f));
            head.forest = forest::forest_from_json(j.at("forest"));
            bundle.heads.push_back(std::move(head));
        }
    } catch (const json::exception& e) {
        raise(Errc::SchemaError, dir.string() + ": " + e.what());
    }
    return bundle;
}

}  // namespace lifetest::lpalt
