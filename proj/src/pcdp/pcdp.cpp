#include "lifetest/pcdp/pcdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/forest/serialize.hpp"
#include "lifetest/numerics/curve_ops.hpp"
#include "lifetest/numerics/kmeans.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::pcdp {

using nlohmann::json;

const char* pcd_kind_name(PcdKind kind) {
    switch (kind) {
        case PcdKind::EIS: return "eis";
        case PcdKind::IV: return "iv";
        case PcdKind::CV: return "cv";
        case PcdKind::LSV: return "lsv";
    }
    return "?";
}

namespace {

PcdKind pcd_kind_from_name(const std::string& name) {
    if (name == "eis") return PcdKind::EIS;
    if (name == "iv") return PcdKind::IV;
    if (name == "cv") return PcdKind::CV;
    if (name == "lsv") return PcdKind::LSV;
    raise(Errc::SchemaError, "unknown PCD kind '" + name + "'");
}

std::vector<Eigen::Index> band_indices(const EisSpectrum& eis, double f_min, double f_max) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < eis.frequencies_hz.size(); ++i)
        if (eis.frequencies_hz[i] >= f_min && eis.frequencies_hz[i] <= f_max) idx.push_back(i);
    return idx;
}

bool grids_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

/// [re; im] restricted to the model's frequency grid.
Eigen::VectorXd eis_concat(const EisSpectrum& eis, const std::vector<Eigen::Index>& idx) {
    const auto g = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd out(2 * g);
    for (Eigen::Index i = 0; i < g; ++i) {
        out[i] = eis.re[idx[static_cast<std::size_t>(i)]];
        out[g + i] = eis.im[idx[static_cast<std::size_t>(i)]];
    }
    return out;
}

double snap_to_band(double target, const EisSpectrum& eis, double lo, double hi) {
    double best = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eis.frequencies_hz.size(); ++i) {
        const double f = eis.frequencies_hz[i];
        if (f < lo || f > hi) continue;
        const double dist = std::abs(f - target);
        if (dist < best_dist || (dist == best_dist && f < best)) {
            best_dist = dist;
            best = f;
        }
    }
    return best;  // a band point exists; callers check coverage first
}

}  // namespace

PresetFrequencies select_preset_frequencies(const std::vector<EisSpectrum>& training_curves,
                                            const PresetSelectionConfig& config) {
    if (training_curves.empty())
        raise(Errc::EmptyInput, "no training curves");

    std::map<std::pair<double, double>, int> votes;
    for (std::size_t ci = 0; ci < training_curves.size(); ++ci) {
        const EisSpectrum& eis = training_curves[ci];
        const std::vector<Eigen::Index> idx = band_indices(eis, config.f_min, config.f_max);

        bool has_medium = false, has_high = false;
        for (const Eigen::Index i : idx) {
            has_medium |= eis.frequencies_hz[i] <= config.f_split;
            has_high |= eis.frequencies_hz[i] >= config.f_split;
        }
        if (!has_medium || !has_high)
            raise(Errc::InsufficientRange,
                  "curve " + std::to_string(ci) + " does not cover both frequency bands");

        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd points(n, 2);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double f = eis.frequencies_hz[idx[static_cast<std::size_t>(r)]];
            points(r, 0) = config.log_frequency ? std::log10(f) : f;
            points(r, 1) = eis.re[idx[static_cast<std::size_t>(r)]];
        }
        if (config.zscore_re) {
            const double mean = points.col(1).mean();
            const double sd =
                std::sqrt((points.col(1).array() - mean).square().sum() / static_cast<double>(n));
            if (sd > 0.0)
                points.col(1) = (points.col(1).array() - mean) / sd;
            else
                points.col(1).setZero();
        }

        const numerics::Clustering clusters =
            numerics::kmeans(points, 2, derive_seed(config.seed, ci));

        double mean_f[2] = {0.0, 0.0};
        double mean_logf[2] = {0.0, 0.0};
        int count[2] = {0, 0};
        for (Eigen::Index r = 0; r < n; ++r) {
            const int c = clusters.assignments[static_cast<std::size_t>(r)];
            const double f = eis.frequencies_hz[idx[static_cast<std::size_t>(r)]];
            mean_f[c] += f;
            mean_logf[c] += std::log10(f);
            count[c] += 1;
        }
        if (count[0] == 0 || count[1] == 0) continue;  // degenerate clustering; no vote
        for (int c = 0; c < 2; ++c) {
            mean_f[c] /= count[c];
            mean_logf[c] /= count[c];
        }
        const int medium = mean_logf[0] <= mean_logf[1] ? 0 : 1;
        const int high = 1 - medium;
        const double f_medium =
            snap_to_band(mean_f[medium], eis, config.f_min, config.f_split);
        const double f_high = snap_to_band(mean_f[high], eis, config.f_split, config.f_max);
        votes[{f_medium, f_high}] += 1;
    }
    if (votes.empty())
        raise(Errc::InsufficientRange, "no curve produced a frequency pair");

    PresetFrequencies preset;
    for (const auto& [pair, count] : votes)
        preset.votes.push_back({pair.first, pair.second, count});
    std::stable_sort(preset.votes.begin(), preset.votes.end(),
                     [](const FrequencyVote& a, const FrequencyVote& b) {
                         if (a.count != b.count) return a.count > b.count;
                         if (a.f_medium != b.f_medium) return a.f_medium < b.f_medium;
                         return a.f_high < b.f_high;
                     });
    preset.f_medium = preset.votes.front().f_medium;
    preset.f_high = preset.votes.front().f_high;
    return preset;
}

ProbeVector probe_impedances(const EisSpectrum& eis, const PresetFrequencies& preset) {
    auto lookup = [&](double f_target) -> Eigen::Index {
        Eigen::Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < eis.frequencies_hz.size(); ++i) {
            const double dist = std::abs(eis.frequencies_hz[i] - f_target);
            if (dist <= 1e-6 * f_target && dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        if (best < 0)
            raise(Errc::FrequencyMissing,
                  "frequency " + std::to_string(f_target) + " Hz not in the spectrum");
        return best;
    };
    const Eigen::Index m = lookup(preset.f_medium);
    const Eigen::Index h = lookup(preset.f_high);
    return {eis.re[m], eis.im[m], eis.re[h], eis.im[h]};
}

Eigen::VectorXd MultiForestModel::predict(const Eigen::VectorXd& input) const {
    if (input.size() != n_inputs)
        raise(Errc::DimensionMismatch, "model expects " + std::to_string(n_inputs) + " inputs");
    Eigen::VectorXd out(static_cast<Eigen::Index>(forests.size()));
    const Eigen::RowVectorXd row = input.transpose();
    for (std::size_t i = 0; i < forests.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = forest::predict_row(forests[i], row);
    return out;
}

namespace {

/// One hyperparameter choice per model group: cross-validated search on the
/// highest-variance target column when a grid is configured.
forest::ForestParams choose_params(const std::string& model_name, const Eigen::MatrixXd& X,
                                   const Eigen::MatrixXd& Y, const PcdpTrainConfig& config,
                                   std::size_t model_index,
                                   std::vector<GridSearchSummary>& tuning) {
    forest::ForestParams params = config.base_params;
    if (config.hyper_grid) {
        Eigen::Index rep = 0;
        double best_var = -1.0;
        for (Eigen::Index c = 0; c < Y.cols(); ++c) {
            const double var = (Y.col(c).array() - Y.col(c).mean()).square().sum();
            if (var > best_var) {
                best_var = var;
                rep = c;
            }
        }
        const forest::GridSearchResult result =
            forest::grid_search_cv(X, Y.col(rep), *config.hyper_grid, config.cv_folds,
                                   derive_seed(config.seed, model_index, 0x6e1d), config.threads);
        params = result.best;
        tuning.push_back({model_name, result.best, 0.0, config.hyper_grid->n_combinations()});
        for (const auto& row : result.table)
            if (row.n_estimators == result.best.n_estimators &&
                row.max_depth == result.best.tree.max_depth &&
                row.min_samples_leaf == result.best.tree.min_samples_leaf &&
                row.max_features == result.best.tree.max_features)
                tuning.back().mean_rmse = row.mean_rmse;
    }
    params.seed = derive_seed(config.seed, model_index, 0xf0e);
    return params;
}

std::optional<SampledCurve> standardized(const std::optional<SampledCurve>& curve,
                                         const GridSpec& grid) {
    if (!curve) return std::nullopt;
    try {
        return numerics::resample_curve(*curve, grid);
    } catch (const Error& e) {
        if (e.code() == Errc::GridOutOfDomain || e.code() == Errc::TooFewPoints ||
            e.code() == Errc::NonMonotoneX)
            return std::nullopt;
        throw;
    }
}

struct CurvePlan {
    CurveKind kind;
    PcdKind pcd;
    GridSpec grid;
    const std::optional<SampledCurve>& (*get)(const CheckUp&);
};

const std::optional<SampledCurve>& get_iv(const CheckUp& cu) { return cu.iv; }
const std::optional<SampledCurve>& get_cv(const CheckUp& cu) { return cu.cv; }
const std::optional<SampledCurve>& get_lsv(const CheckUp& cu) { return cu.lsv; }

struct IndicatorPlan {
    const char* name;
    PcdKind source;
    std::optional<double> (*get)(const CheckUp&);
};

std::optional<double> get_r_o2(const CheckUp& cu) { return cu.indicators.r_o2_total; }
std::optional<double> get_i_lim(const CheckUp& cu) { return cu.indicators.i_lim; }
std::optional<double> get_ecsa(const CheckUp& cu) { return cu.indicators.ecsa; }
std::optional<double> get_i_cross(const CheckUp& cu) { return cu.indicators.i_cross; }

const char* indicator_units(const std::string& name) {
    if (name == "i_lim" || name == "i_cross") return "A_cm2";
    if (name == "r_o2_total") return "s_m";
    if (name == "ecsa") return "cm2Pt_cm2geo";
    if (name == "c_rem") return "uF";
    return "?";
}

}  // namespace

PcdpModelBundle train_pcdp(const std::vector<CheckUp>& train, const PcdpTrainConfig& config) {
    PcdpModelBundle bundle;
    bundle.config = config;

    // usable rows carry an EIS that covers both bands on the shared grid
    std::vector<const CheckUp*> rows;
    for (const CheckUp& cu : train)
        if (cu.eis) rows.push_back(&cu);
    if (rows.empty())
        raise(Errc::NoTrainingRows, "no training check-up carries an EIS");
    bundle.log.skipped_rows["eis_missing"] = static_cast<int>(train.size() - rows.size());

    std::vector<EisSpectrum> spectra;
    spectra.reserve(rows.size());
    for (const CheckUp* cu : rows) spectra.push_back(*cu->eis);
    PresetSelectionConfig preset_config = config.preset;
    preset_config.seed = derive_seed(config.seed, 0x97e5);
    bundle.preset = select_preset_frequencies(spectra, preset_config);

    // shared band grid, fixed from the first row
    const std::vector<Eigen::Index> idx0 =
        band_indices(*rows.front()->eis, config.preset.f_min, config.preset.f_max);
    Eigen::VectorXd freq_grid(static_cast<Eigen::Index>(idx0.size()));
    for (std::size_t i = 0; i < idx0.size(); ++i)
        freq_grid[static_cast<Eigen::Index>(i)] = rows.front()->eis->frequencies_hz[idx0[i]];

    std::vector<const CheckUp*> usable;
    std::vector<Eigen::VectorXd> eis_vectors;
    Eigen::MatrixXd X_probe;
    {
        std::vector<ProbeVector> probes;
        for (const CheckUp* cu : rows) {
            const std::vector<Eigen::Index> idx =
                band_indices(*cu->eis, config.preset.f_min, config.preset.f_max);
            Eigen::VectorXd grid(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i)
                grid[static_cast<Eigen::Index>(i)] = cu->eis->frequencies_hz[idx[i]];
            if (!grids_equal(grid, freq_grid)) {
                bundle.log.skipped_rows["eis_grid_mismatch"] += 1;
                continue;
            }
            probes.push_back(probe_impedances(*cu->eis, bundle.preset));
            eis_vectors.push_back(eis_concat(*cu->eis, idx));
            usable.push_back(cu);
        }
        if (usable.empty())
            raise(Errc::NoTrainingRows, "no training row matches the shared frequency grid");
        X_probe.resize(static_cast<Eigen::Index>(usable.size()), 4);
        for (std::size_t r = 0; r < probes.size(); ++r)
            X_probe.row(static_cast<Eigen::Index>(r)) = probes[r].to_vector().transpose();
    }

    const auto n = static_cast<Eigen::Index>(usable.size());
    const Eigen::Index g = freq_grid.size();
    std::size_t model_index = 0;

    // EIS reconstruction model: 4 probes -> [re; im]
    {
        Eigen::MatrixXd Y(n, 2 * g);
        for (Eigen::Index r = 0; r < n; ++r)
            Y.row(r) = eis_vectors[static_cast<std::size_t>(r)].transpose();
        const forest::ForestParams params =
            choose_params("eis", X_probe, Y, config, model_index++, bundle.tuning);
        EisModel model;
        model.freq_grid = freq_grid;
        model.model.n_inputs = 4;
        model.model.forests = forest::fit_multi_target(X_probe, Y, params, config.threads);
        bundle.eis = std::move(model);
    }

    // curve models: EIS vector -> standardized curve
    const CurvePlan curve_plans[] = {
        {CurveKind::IV, PcdKind::IV, config.iv_grid, &get_iv},
        {CurveKind::CV, PcdKind::CV, config.cv_grid, &get_cv},
        {CurveKind::LSV, PcdKind::LSV, config.lsv_grid, &get_lsv},
    };
    for (const CurvePlan& plan : curve_plans) {
        std::vector<Eigen::Index> ok_rows;
        std::vector<Eigen::VectorXd> targets;
        for (Eigen::Index r = 0; r < n; ++r) {
            const std::optional<SampledCurve> std_curve =
                standardized(plan.get(*usable[static_cast<std::size_t>(r)]), plan.grid);
            if (!std_curve) continue;
            ok_rows.push_back(r);
            targets.push_back(std_curve->y);
        }
        const std::string name = pcd_kind_name(plan.pcd);
        bundle.log.skipped_rows[name + "_unusable"] = static_cast<int>(n - ok_rows.size());
        if (ok_rows.empty()) {
            bundle.log.messages.push_back("curve model '" + name + "' absent: no usable rows");
            ++model_index;
            continue;
        }
        Eigen::MatrixXd X(static_cast<Eigen::Index>(ok_rows.size()), 2 * g);
        Eigen::MatrixXd Y(static_cast<Eigen::Index>(ok_rows.size()), plan.grid.n_points);
        for (std::size_t r = 0; r < ok_rows.size(); ++r) {
            X.row(static_cast<Eigen::Index>(r)) =
                eis_vectors[static_cast<std::size_t>(ok_rows[r])].transpose();
            Y.row(static_cast<Eigen::Index>(r)) = targets[r].transpose();
        }
        const forest::ForestParams params =
            choose_params(name, X, Y, config, model_index++, bundle.tuning);
        CurveModel model;
        model.kind = plan.kind;
        model.grid = plan.grid;
        model.model.n_inputs = static_cast<int>(2 * g);
        model.model.forests = forest::fit_multi_target(X, Y, params, config.threads);
        bundle.curves.push_back(std::move(model));
    }

    // indicator models: source PCD vector -> scalar
    const IndicatorPlan indicator_plans[] = {
        {"r_o2_total", PcdKind::EIS, &get_r_o2},
        {"i_lim", PcdKind::IV, &get_i_lim},
        {"ecsa", PcdKind::CV, &get_ecsa},
        {"i_cross", PcdKind::LSV, &get_i_cross},
    };
    for (const IndicatorPlan& plan : indicator_plans) {
        std::vector<Eigen::VectorXd> inputs;
        std::vector<double> targets;
        for (Eigen::Index r = 0; r < n; ++r) {
            const CheckUp& cu = *usable[static_cast<std::size_t>(r)];
            const std::optional<double> truth = plan.get(cu);
            if (!truth) continue;
            if (plan.source == PcdKind::EIS) {
                inputs.push_back(eis_vectors[static_cast<std::size_t>(r)]);
            } else {
                const CurvePlan* cp = nullptr;
                for (const CurvePlan& candidate : curve_plans)
                    if (candidate.pcd == plan.source) cp = &candidate;
                const std::optional<SampledCurve> std_curve = standardized(cp->get(cu), cp->grid);
                if (!std_curve) continue;
                inputs.push_back(std_curve->y);
            }
            targets.push_back(*truth);
        }
        const std::string name = plan.name;
        bundle.log.skipped_rows["indicator_" + name + "_unusable"] =
            static_cast<int>(n - static_cast<Eigen::Index>(targets.size()));
        if (targets.empty()) {
            bundle.log.messages.push_back("indicator model '" + name + "' absent: no usable rows");
            ++model_index;
            continue;
        }
        Eigen::MatrixXd X(static_cast<Eigen::Index>(inputs.size()), inputs.front().size());
        Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
        for (std::size_t r = 0; r < inputs.size(); ++r) {
            X.row(static_cast<Eigen::Index>(r)) = inputs[r].transpose();
            y[static_cast<Eigen::Index>(r)] = targets[r];
        }
        const forest::ForestParams params =
            choose_params(name, X, y, config, model_index++, bundle.tuning);
        IndicatorModel model;
        model.indicator = name;
        model.source = plan.source;
        model.forest = forest::fit_forest(X, y, params, config.threads);
        bundle.indicators.push_back(std::move(model));
    }
    return bundle;
}

PcdpPrediction predict_pcdp(const PcdpModelBundle& bundle, const ProbeVector& probe) {
    if (!bundle.eis)
        raise(Errc::ModelMissing, "bundle has no EIS model");
    PcdpPrediction pred;
    const Eigen::VectorXd eis_vec = bundle.eis->model.predict(probe.to_vector());
    const Eigen::Index g = bundle.eis->freq_grid.size();
    pred.eis.frequencies_hz = bundle.eis->freq_grid;
    pred.eis.re = eis_vec.head(g);
    pred.eis.im = eis_vec.tail(g);

    for (const CurveModel& cm : bundle.curves) {
        const Eigen::VectorXd y = cm.model.predict(eis_vec);
        pred.curves.push_back(make_curve(cm.kind, cm.grid.points(), y));
    }
    for (const IndicatorModel& im : bundle.indicators) {
        const Eigen::VectorXd* input = nullptr;
        Eigen::VectorXd curve_input;
        if (im.source == PcdKind::EIS) {
            input = &eis_vec;
        } else {
            const CurveKind kind = im.source == PcdKind::IV   ? CurveKind::IV
                                   : im.source == PcdKind::CV ? CurveKind::CV
                                                              : CurveKind::LSV;
            for (const SampledCurve& curve : pred.curves)
                if (curve.kind == kind) curve_input = curve.y;
            if (curve_input.size() == 0) continue;  // source curve model absent
            input = &curve_input;
        }
        const double value = forest::predict_row(im.forest, input->transpose());
        if (im.indicator == "r_o2_total") pred.indicators.r_o2_total = value;
        else if (im.indicator == "i_lim") pred.indicators.i_lim = value;
        else if (im.indicator == "ecsa") pred.indicators.ecsa = value;
        else if (im.indicator == "i_cross") pred.indicators.i_cross = value;
        else if (im.indicator == "c_rem") pred.indicators.c_rem = value;
    }
    return pred;
}

PcdpEvaluation evaluate_pcdp(const PcdpModelBundle& bundle, const std::vector<CheckUp>& test) {
    PcdpEvaluation eval;
    if (!bundle.eis)
        raise(Errc::ModelMissing, "bundle has no EIS model");
    const Eigen::VectorXd& freq_grid = bundle.eis->freq_grid;

    struct Pool {
        std::vector<double> truth, pred;
        std::vector<std::string> refs;
    };
    std::map<std::pair<std::string, std::string>, Pool> pools;  // (output, source)
    auto pool_add = [&](const std::string& output, const std::string& source, double t, double p,
                        const std::string& ref) {
        Pool& pool = pools[{output, source}];
        pool.truth.push_back(t);
        pool.pred.push_back(p);
        pool.refs.push_back(ref);
    };

    const IndicatorPlan indicator_plans[] = {
        {"r_o2_total", PcdKind::EIS, &get_r_o2},
        {"i_lim", PcdKind::IV, &get_i_lim},
        {"ecsa", PcdKind::CV, &get_ecsa},
        {"i_cross", PcdKind::LSV, &get_i_cross},
    };

    for (std::size_t r = 0; r < test.size(); ++r) {
        const CheckUp& cu = test[r];
        const std::string ref = "row" + std::to_string(r) + ":" + cu.stage_id;
        if (!cu.eis) continue;
        const std::vector<Eigen::Index> idx =
            band_indices(*cu.eis, bundle.config.preset.f_min, bundle.config.preset.f_max);
        Eigen::VectorXd grid(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            grid[static_cast<Eigen::Index>(i)] = cu.eis->frequencies_hz[idx[i]];
        if (!grids_equal(grid, freq_grid)) continue;

        const Eigen::VectorXd measured_vec = eis_concat(*cu.eis, idx);
        const ProbeVector probe = probe_impedances(*cu.eis, bundle.preset);
        const PcdpPrediction pred = predict_pcdp(bundle, probe);
        const Eigen::Index g = freq_grid.size();

        for (Eigen::Index i = 0; i < 2 * g; ++i) {
            const double predicted = i < g ? pred.eis.re[i] : pred.eis.im[i - g];
            pool_add("eis", "predicted", measured_vec[i], predicted, ref);
        }

        for (const CurveModel& cm : bundle.curves) {
            const std::string name = curve_kind_name(cm.kind);
            const std::optional<SampledCurve>& raw = cm.kind == CurveKind::IV   ? cu.iv
                                                     : cm.kind == CurveKind::CV ? cu.cv
                                                                                : cu.lsv;
            const std::optional<SampledCurve> truth = standardized(raw, cm.grid);
            if (!truth) continue;
            const SampledCurve* predicted = nullptr;
            for (const SampledCurve& curve : pred.curves)
                if (curve.kind == cm.kind) predicted = &curve;
            if (predicted)
                for (Eigen::Index i = 0; i < truth->y.size(); ++i)
                    pool_add(name, "predicted", truth->y[i], predicted->y[i], ref);
            const Eigen::VectorXd measured_source = cm.model.predict(measured_vec);
            for (Eigen::Index i = 0; i < truth->y.size(); ++i)
                pool_add(name, "measured", truth->y[i], measured_source[i], ref);
        }

        for (const IndicatorModel& im : bundle.indicators) {
            const IndicatorPlan* plan = nullptr;
            for (const IndicatorPlan& candidate : indicator_plans)
                if (candidate.name == im.indicator) plan = &candidate;
            if (!plan) continue;
            const std::optional<double> truth = plan->get(cu);
            if (!truth) continue;

            std::optional<double> predicted_value;
            if (im.indicator == "r_o2_total") predicted_value = pred.indicators.r_o2_total;
            else if (im.indicator == "i_lim") predicted_value = pred.indicators.i_lim;
            else if (im.indicator == "ecsa") predicted_value = pred.indicators.ecsa;
            else if (im.indicator == "i_cross") predicted_value = pred.indicators.i_cross;
            if (predicted_value)
                pool_add(im.indicator, "predicted", *truth, *predicted_value, ref);

            // measured-source: feed the model the standardized measured PCD
            std::optional<Eigen::VectorXd> input;
            if (im.source == PcdKind::EIS) {
                input = measured_vec;
            } else {
                const std::optional<SampledCurve>& raw = im.source == PcdKind::IV   ? cu.iv
                                                         : im.source == PcdKind::CV ? cu.cv
                                                                                    : cu.lsv;
                const GridSpec grid_spec = im.source == PcdKind::IV ? bundle.config.iv_grid
                                           : im.source == PcdKind::CV
                                               ? bundle.config.cv_grid
                                               : bundle.config.lsv_grid;
                const std::optional<SampledCurve> std_curve = standardized(raw, grid_spec);
                if (std_curve) input = std_curve->y;
            }
            if (input)
                pool_add(im.indicator, "measured", *truth,
                         forest::predict_row(im.forest, input->transpose()), ref);
        }
    }

    for (auto& [key, pool] : pools) {
        const auto n = static_cast<Eigen::Index>(pool.truth.size());
        const Eigen::Map<const Eigen::VectorXd> t(pool.truth.data(), n);
        const Eigen::Map<const Eigen::VectorXd> p(pool.pred.data(), n);
        EvalEntry entry;
        entry.output = key.first;
        entry.source = key.second;
        entry.metrics = numerics::compute_metrics_lenient(t, p);
        if (key.first == "eis")
            entry.unit = "mohm_cm2";
        else if (key.first == "iv")
            entry.unit = "V";
        else if (key.first == "cv" || key.first == "lsv")
            entry.unit = "A_cm2";
        else
            entry.unit = indicator_units(key.first);
        eval.entries.push_back(std::move(entry));

        std::vector<ScatterPoint>& scatter = eval.scatter[key.first + "/" + key.second];
        for (Eigen::Index i = 0; i < n; ++i)
            scatter.push_back({pool.truth[static_cast<std::size_t>(i)],
                               pool.pred[static_cast<std::size_t>(i)],
                               pool.refs[static_cast<std::size_t>(i)]});
    }
    if (eval.entries.empty())
        raise(Errc::NoGroundTruth, "no test check-up carries usable ground truth");
    return eval;
}

// ---------------------------------------------------------------------------
// bundle archive
// ---------------------------------------------------------------------------

namespace {

json grid_spec_to_json(const GridSpec& grid) {
    return json{{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n_points", grid.n_points}};
}

GridSpec grid_spec_from_json(const json& j) {
    return {j.at("x_min").get<double>(), j.at("x_max").get<double>(),
            j.at("n_points").get<int>()};
}

json multi_forest_to_json(const MultiForestModel& model) {
    json forests = json::array();
    for (const forest::Forest& f : model.forests) forests.push_back(forest::forest_to_json(f));
    return json{{"n_inputs", model.n_inputs}, {"forests", std::move(forests)}};
}

MultiForestModel multi_forest_from_json(const json& j) {
    MultiForestModel model;
    model.n_inputs = j.at("n_inputs").get<int>();
    for (const json& f : j.at("forests")) model.forests.push_back(forest::forest_from_json(f));
    return model;
}

json config_to_json(const PcdpTrainConfig& config) {
    json j{{"seed", config.seed},
           {"cv_folds", config.cv_folds},
           {"threads", config.threads},
           {"base_params", forest::params_to_json(config.base_params)},
           {"iv_grid", grid_spec_to_json(config.iv_grid)},
           {"cv_grid", grid_spec_to_json(config.cv_grid)},
           {"lsv_grid", grid_spec_to_json(config.lsv_grid)},
           {"preset",
            {{"f_min", config.preset.f_min},
             {"f_split", config.preset.f_split},
             {"f_max", config.preset.f_max},
             {"log_frequency", config.preset.log_frequency},
             {"zscore_re", config.preset.zscore_re}}}};
    if (config.hyper_grid) j["hyper_grid"] = forest::grid_to_json(*config.hyper_grid);
    return j;
}

PcdpTrainConfig config_from_json(const json& j) {
    PcdpTrainConfig config;
    config.seed = j.at("seed").get<std::uint64_t>();
    config.cv_folds = j.at("cv_folds").get<int>();
    config.threads = j.at("threads").get<int>();
    config.base_params = forest::params_from_json(j.at("base_params"));
    config.iv_grid = grid_spec_from_json(j.at("iv_grid"));
    config.cv_grid = grid_spec_from_json(j.at("cv_grid"));
    config.lsv_grid = grid_spec_from_json(j.at("lsv_grid"));
    const json& p = j.at("preset");
    config.preset.f_min = p.at("f_min").get<double>();
    config.preset.f_split = p.at("f_split").get<double>();
    config.preset.f_max = p.at("f_max").get<double>();
    config.preset.log_frequency = p.at("log_frequency").get<bool>();
    config.preset.zscore_re = p.at("zscore_re").get<bool>();
    if (j.contains("hyper_grid")) config.hyper_grid = forest::grid_from_json(j["hyper_grid"]);
    return config;
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

}  // namespace

void save_pcdp_bundle(const PcdpModelBundle& bundle, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "models", ec);
    if (ec)
        raise(Errc::IoError, "cannot create " + dir.string());

    json manifest;
    manifest["format"] = "pcdp-bundle";
    manifest["format_version"] = 1;
    json votes = json::array();
    for (const FrequencyVote& vote : bundle.preset.votes)
        votes.push_back({{"f_medium", vote.f_medium}, {"f_high", vote.f_high}, {"count", vote.count}});
    manifest["preset"] = {{"f_medium", bundle.preset.f_medium},
                          {"f_high", bundle.preset.f_high},
                          {"votes", std::move(votes)}};
    manifest["config"] = config_to_json(bundle.config);
    json tuning = json::array();
    for (const GridSearchSummary& t : bundle.tuning)
        tuning.push_back({{"model", t.model},
                          {"chosen", forest::params_to_json(t.chosen)},
                          {"mean_rmse", t.mean_rmse},
                          {"combinations", t.combinations}});
    manifest["tuning"] = std::move(tuning);
    manifest["log"] = {{"messages", bundle.log.messages},
                       {"skipped_rows", bundle.log.skipped_rows}};

    json models = json::object();
    if (bundle.eis) {
        std::vector<double> grid(bundle.eis->freq_grid.data(),
                                 bundle.eis->freq_grid.data() + bundle.eis->freq_grid.size());
        json j{{"freq_grid", grid}, {"model", multi_forest_to_json(bundle.eis->model)}};
        write_json_file(dir / "models" / "eis.json", j);
        models["eis"] = "models/eis.json";
    }
    json curve_list = json::array();
    for (const CurveModel& cm : bundle.curves) {
        const std::string name = std::string("curve_") + curve_kind_name(cm.kind);
        json j{{"kind", curve_kind_name(cm.kind)},
               {"grid", grid_spec_to_json(cm.grid)},
               {"model", multi_forest_to_json(cm.model)}};
        write_json_file(dir / "models" / (name + ".json"), j);
        curve_list.push_back("models/" + name + ".json");
    }
    models["curves"] = std::move(curve_list);
    json indicator_list = json::array();
    for (const IndicatorModel& im : bundle.indicators) {
        const std::string name = "indicator_" + im.indicator;
        json j{{"indicator", im.indicator},
               {"source", pcd_kind_name(im.source)},
               {"forest", forest::forest_to_json(im.forest)}};
        write_json_file(dir / "models" / (name + ".json"), j);
        indicator_list.push_back("models/" + name + ".json");
    }
    models["indicators"] = std::move(indicator_list);
    manifest["models"] = std::move(models);
    write_json_file(dir / "manifest.json", manifest, 2);
}

PcdpModelBundle load_pcdp_bundle(const std::filesystem::path& dir) {
    const json manifest = read_json_file(dir / "manifest.json");
    PcdpModelBundle bundle;
    try {
        if (manifest.at("format").get<std::string>() != "pcdp-bundle")
            raise(Errc::SchemaError, "not a pcdp bundle");
        bundle.config = config_from_json(manifest.at("config"));
        const json& preset = manifest.at("preset");
        bundle.preset.f_medium = preset.at("f_medium").get<double>();
        bundle.preset.f_high = preset.at("f_high").get<double>();
        for (const json& vote : preset.at("votes"))
            bundle.preset.votes.push_back({vote.at("f_medium").get<double>(),
                                           vote.at("f_high").get<double>(),
                                           vote.at("count").get<int>()});
        for (const json& t : manifest.at("tuning"))
            bundle.tuning.push_back({t.at("model").get<std::string>(),
                                     forest::params_from_json(t.at("chosen")),
                                     t.at("mean_rmse").get<double>(),
                                     t.at("combinations").get<std::size_t>()});
        bundle.log.messages = manifest.at("log").at("messages").get<std::vector<std::string>>();
        bundle.log.skipped_rows =
            manifest.at("log").at("skipped_rows").get<std::map<std::string, int>>();

        const json& models = manifest.at("models");
        if (models.contains("eis")) {
            const json j = read_json_file(dir / models["eis"].get<std::string>());
            EisModel model;
            const auto grid = j.at("freq_grid").get<std::vector<double>>();
            model.freq_grid =
                Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
            model.model = multi_forest_from_json(j.at("model"));
            bundle.eis = std::move(model);
        }
        for (const json& path : models.at("curves")) {
            const json j = read_json_file(dir / path.get<std::string>());
            CurveModel model;
            model.kind = curve_kind_from_name(j.at("kind").get<std::string>());
            model.grid = grid_spec_from_json(j.at("grid"));
            model.model = multi_forest_from_json(j.at("model"));
            bundle.curves.push_back(std::move(model));
        }
        for (const json& path : models.at("indicators")) {
            const json j = read_json_file(dir / path.get<std::string>());
            IndicatorModel model;
            model.indicator = j.at("indicator").get<std::string>();
            model.source = pcd_kind_from_name(j.at("source").get<std::string>());
            model.forest = forest::forest_from_json(j.at("forest"));
            bundle.indicators.push_back(std::move(model));
        }
    } catch (const json::exception& e) {
        raise(Errc::SchemaError, dir.string() + ": " + e.what());
    }
    return bundle;
}

}  // namespace lifetest::pcdp
