#include "lifetest/data/adapter.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/util/csv.hpp"

namespace lifetest::data {

using nlohmann::json;

namespace {

struct RawColumns {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd z;  // only for three-column files (EIS)
};

RawColumns read_mapped(const std::filesystem::path& path, const json& spec,
                       const std::vector<std::string>& canonical_names) {
    char delimiter = ',';
    if (spec.contains("delimiter")) {
        const auto d = spec.at("delimiter").get<std::string>();
        if (d.size() != 1)
            raise(Errc::ConfigError, "delimiter must be a single character");
        delimiter = d[0];
    }
    const csv::Table table = csv::read_table(path, delimiter);
    const json& columns = spec.at("columns");
    const json scale = spec.value("scale", json::object());

    RawColumns out;
    std::vector<Eigen::VectorXd*> slots = {&out.x, &out.y, &out.z};
    for (std::size_t c = 0; c < canonical_names.size(); ++c) {
        const std::string& canonical = canonical_names[c];
        const std::string source = columns.at(canonical).get<std::string>();
        const std::size_t col = table.column(source, path.string());
        const double factor = scale.value(canonical, 1.0);
        Eigen::VectorXd& v = *slots[c];
        v.resize(static_cast<Eigen::Index>(table.rows.size()));
        for (std::size_t r = 0; r < table.rows.size(); ++r)
            v[static_cast<Eigen::Index>(r)] =
                factor * csv::parse_double(table.rows[r][col], path.string());
    }
    return out;
}

/// Sorts by x and keeps the first sample at each x value.
void sort_dedup(Eigen::VectorXd& x, Eigen::VectorXd& y) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
    Eigen::VectorXd xs(x.size()), ys(y.size());
    Eigen::Index n = 0;
    for (const Eigen::Index idx : order) {
        if (n > 0 && x[idx] == xs[n - 1]) continue;
        xs[n] = x[idx];
        ys[n] = y[idx];
        ++n;
    }
    x = xs.head(n);
    y = ys.head(n);
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> anodic_branch(const Eigen::VectorXd& v,
                                                          const Eigen::VectorXd& i) {
    if (v.size() != i.size() || v.size() < 2)
        raise(Errc::LengthMismatch, "anodic_branch needs equal lengths >= 2");
    // last maximal strictly-increasing run
    Eigen::Index end = v.size();
    Eigen::Index begin = end - 1;
    while (begin > 0 && v[begin] > v[begin - 1]) --begin;
    // a trailing descending tail means the sweep ended cathodic; back up to
    // the last ascending run instead
    if (end - begin < 2) {
        end = begin + 1;
        while (end > 1 && !(v[end - 1] > v[end - 2])) --end;
        begin = end - 1;
        while (begin > 0 && v[begin] > v[begin - 1]) --begin;
    }
    if (end - begin < 2)
        raise(Errc::NonMonotoneX, "no increasing-voltage branch found");
    Eigen::VectorXd vb = v.segment(begin, end - begin);
    Eigen::VectorXd ib = i.segment(begin, end - begin);
    sort_dedup(vb, ib);
    return {std::move(vb), std::move(ib)};
}

std::filesystem::path ingest_dataset(const std::filesystem::path& adapter_config,
                                     const std::filesystem::path& raw_root,
                                     const std::filesystem::path& out_dir) {
    std::ifstream in(adapter_config);
    if (!in)
        raise(Errc::ParseError, "cannot open " + adapter_config.string());
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        raise(Errc::ParseError, adapter_config.string() + ": " + e.what());
    }

    Collection collection;
    SplitSpec split;
    try {
        collection.device_class =
            device_class_from_name(cfg.at("device_class").get<std::string>());
        if (cfg.contains("notes"))
            collection.provenance = cfg["notes"].get<std::vector<std::string>>();
        collection.provenance.push_back("converted via adapter config " +
                                        adapter_config.filename().string());

        for (const json& jdev : cfg.at("devices")) {
            LifeTest lt;
            lt.device_id = jdev.at("device_id").get<std::string>();
            lt.device_class = collection.device_class;
            if (jdev.contains("metadata"))
                lt.metadata = jdev["metadata"].get<std::map<std::string, std::string>>();

            for (const json& jcu : jdev.at("checkups")) {
                CheckUp cu;
                cu.stage_id = jcu.at("stage_id").get<std::string>();
                cu.stage_time.value = jcu.at("stage_time").get<double>();
                cu.stage_time.unit = jcu.value("stage_time_unit", std::string("s"));
                if (jcu.contains("conditions"))
                    cu.conditions.values =
                        jcu["conditions"].get<std::map<std::string, double>>();

                if (jcu.contains("eis")) {
                    const json& spec = jcu["eis"];
                    RawColumns cols =
                        read_mapped(raw_root / spec.at("path").get<std::string>(), spec,
                                    {"frequency_hz", "re_mohm_cm2", "im_mohm_cm2"});
                    // ascending frequency; re/im follow
                    std::vector<Eigen::Index> order(static_cast<std::size_t>(cols.x.size()));
                    std::iota(order.begin(), order.end(), 0);
                    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                        return cols.x[a] < cols.x[b];
                    });
                    EisSpectrum eis;
                    eis.frequencies_hz.resize(cols.x.size());
                    eis.re.resize(cols.x.size());
                    eis.im.resize(cols.x.size());
                    for (std::size_t r = 0; r < order.size(); ++r) {
                        eis.frequencies_hz[static_cast<Eigen::Index>(r)] = cols.x[order[r]];
                        eis.re[static_cast<Eigen::Index>(r)] = cols.y[order[r]];
                        eis.im[static_cast<Eigen::Index>(r)] = cols.z[order[r]];
                    }
                    cu.eis = std::move(eis);
                }
                auto load_curve = [&](const char* key, CurveKind kind,
                                      const std::vector<std::string>& names)
                    -> std::optional<SampledCurve> {
                    if (!jcu.contains(key)) return std::nullopt;
                    const json& spec = jcu[key];
                    RawColumns cols =
                        read_mapped(raw_root / spec.at("path").get<std::string>(), spec, names);
                    if (spec.value("anodic_branch", false)) {
                        auto [vb, ib] = anodic_branch(cols.x, cols.y);
                        cols.x = std::move(vb);
                        cols.y = std::move(ib);
                    } else if (spec.value("sort_by_x", true)) {
                        sort_dedup(cols.x, cols.y);
                    }
                    return make_curve(kind, std::move(cols.x), std::move(cols.y));
                };
                cu.iv = load_curve("iv", CurveKind::IV, {"current_density_a_cm2", "voltage_v"});
                cu.cv = load_curve("cv", CurveKind::CV, {"voltage_v", "current_density_a_cm2"});
                cu.lsv = load_curve("lsv", CurveKind::LSV, {"voltage_v", "current_density_a_cm2"});

                if (jcu.contains("indicators")) {
                    const json& ind = jcu["indicators"];
                    auto set = [&](const char* name, std::optional<double>& slot) {
                        if (ind.contains(name)) slot = ind.at(name).get<double>();
                    };
                    set("i_lim", cu.indicators.i_lim);
                    set("r_o2_total", cu.indicators.r_o2_total);
                    set("ecsa", cu.indicators.ecsa);
                    set("i_cross", cu.indicators.i_cross);
                    set("c_rem", cu.indicators.c_rem);
                }
                lt.checkups.push_back(std::move(cu));
            }
            std::stable_sort(lt.checkups.begin(), lt.checkups.end(),
                             [](const CheckUp& a, const CheckUp& b) {
                                 return a.stage_time.value < b.stage_time.value;
                             });
            collection.devices.push_back(std::move(lt));
        }
        if (cfg.contains("split")) {
            split.train_ids = cfg["split"].at("train_ids").get<std::vector<std::string>>();
            split.test_ids = cfg["split"].at("test_ids").get<std::vector<std::string>>();
            split.exclusions = cfg["split"].value("exclusions", std::vector<std::string>{});
        }
    } catch (const json::exception& e) {
        raise(Errc::SchemaError, adapter_config.string() + ": " + e.what());
    }

    return write_dataset(collection, split, out_dir);
}

}  // namespace lifetest::data
