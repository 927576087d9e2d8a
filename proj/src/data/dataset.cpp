#include "lifetest/data/dataset.hpp"

#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "lifetest/core/error.hpp"
#include "lifetest/util/csv.hpp"

namespace lifetest::data {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

const std::map<std::string, std::string>& canonical_units() {
    static const std::map<std::string, std::string> units = {
        {"frequency", "Hz"},          {"impedance", "mohm_cm2"},
        {"current_density", "A_cm2"}, {"voltage", "V"},
        {"i_lim", "A_cm2"},           {"r_o2_total", "s_m"},
        {"ecsa", "cm2Pt_cm2geo"},     {"i_cross", "A_cm2"},
        {"c_rem", "uF"},
    };
    return units;
}

std::string indicator_unit(const std::string& name) {
    const auto it = canonical_units().find(name);
    if (it == canonical_units().end())
        raise(Errc::SchemaError, "unknown indicator '" + name + "'");
    return it->second;
}

std::optional<double>& indicator_slot(AgingIndicators& ind, const std::string& name) {
    if (name == "i_lim") return ind.i_lim;
    if (name == "r_o2_total") return ind.r_o2_total;
    if (name == "ecsa") return ind.ecsa;
    if (name == "i_cross") return ind.i_cross;
    if (name == "c_rem") return ind.c_rem;
    raise(Errc::SchemaError, "unknown indicator '" + name + "'");
}

std::vector<std::pair<std::string, double>> present_indicators(const AgingIndicators& ind) {
    std::vector<std::pair<std::string, double>> out;
    if (ind.i_lim) out.emplace_back("i_lim", *ind.i_lim);
    if (ind.r_o2_total) out.emplace_back("r_o2_total", *ind.r_o2_total);
    if (ind.ecsa) out.emplace_back("ecsa", *ind.ecsa);
    if (ind.i_cross) out.emplace_back("i_cross", *ind.i_cross);
    if (ind.c_rem) out.emplace_back("c_rem", *ind.c_rem);
    return out;
}

std::string stage_dir_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "stage%03zu", index);
    return buf;
}

void write_eis_csv(const std::filesystem::path& path, const EisSpectrum& eis) {
    csv::write_columns(path, {"frequency_hz", "re_mohm_cm2", "im_mohm_cm2"},
                       {eis.frequencies_hz, eis.re, eis.im});
}

void write_curve_csv(const std::filesystem::path& path, const SampledCurve& curve) {
    if (curve.kind == CurveKind::IV)
        csv::write_columns(path, {"current_density_a_cm2", "voltage_v"}, {curve.x, curve.y});
    else
        csv::write_columns(path, {"voltage_v", "current_density_a_cm2"}, {curve.x, curve.y});
}

EisSpectrum read_eis_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_table(path);
    const std::size_t cf = table.column("frequency_hz", path.string());
    const std::size_t cr = table.column("re_mohm_cm2", path.string());
    const std::size_t ci = table.column("im_mohm_cm2", path.string());
    EisSpectrum eis;
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    eis.frequencies_hz.resize(n);
    eis.re.resize(n);
    eis.im.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        eis.frequencies_hz[r] = csv::parse_double(row[cf], path.string());
        eis.re[r] = csv::parse_double(row[cr], path.string());
        eis.im[r] = csv::parse_double(row[ci], path.string());
    }
    return eis;
}

SampledCurve read_curve_csv(const std::filesystem::path& path, CurveKind kind) {
    const csv::Table table = csv::read_table(path);
    const char* x_name = kind == CurveKind::IV ? "current_density_a_cm2" : "voltage_v";
    const char* y_name = kind == CurveKind::IV ? "voltage_v" : "current_density_a_cm2";
    const std::size_t cx = table.column(x_name, path.string());
    const std::size_t cy = table.column(y_name, path.string());
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        x[r] = csv::parse_double(row[cx], path.string());
        y[r] = csv::parse_double(row[cy], path.string());
    }
    return make_curve(kind, std::move(x), std::move(y));
}

json split_to_json(const SplitSpec& split) {
    return json{{"train_ids", split.train_ids},
                {"test_ids", split.test_ids},
                {"exclusions", split.exclusions}};
}

SplitSpec split_from_json(const json& j) {
    SplitSpec split;
    split.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    split.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    split.exclusions = j.at("exclusions").get<std::vector<std::string>>();
    return split;
}

struct SplitSelection {
    bool whole_device = false;
    std::set<std::string> stages;

    bool selects(const std::string& stage_id) const {
        return whole_device || stages.count(stage_id) > 0;
    }
    bool empty() const { return !whole_device && stages.empty(); }
};

std::map<std::string, SplitSelection> resolve_ids(const Collection& collection,
                                                  const std::vector<std::string>& ids,
                                                  const std::string& list_name) {
    std::map<std::string, SplitSelection> out;
    for (const std::string& id : ids) {
        const std::size_t colon = id.find(':');
        const std::string device_id = id.substr(0, colon == std::string::npos ? id.size() : colon);
        const LifeTest* device = nullptr;
        for (const LifeTest& lt : collection.devices)
            if (lt.device_id == device_id) device = &lt;
        if (!device)
            raise(Errc::UnknownId, list_name + " id '" + id + "' matches no device");
        if (colon == std::string::npos) {
            out[device_id].whole_device = true;
        } else {
            const std::string stage_id = id.substr(colon + 1);
            bool found = false;
            for (const CheckUp& cu : device->checkups) found |= cu.stage_id == stage_id;
            if (!found)
                raise(Errc::UnknownId, list_name + " id '" + id + "' matches no check-up");
            out[device_id].stages.insert(stage_id);
        }
    }
    return out;
}

bool overlaps(const SplitSelection& a, const SplitSelection& b) {
    if (a.whole_device && !b.empty()) return true;
    if (b.whole_device && !a.empty()) return true;
    for (const std::string& s : a.stages)
        if (b.stages.count(s)) return true;
    return false;
}

}  // namespace

std::filesystem::path write_dataset(const Collection& collection, const SplitSpec& split,
                                    const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        raise(Errc::IoError, "cannot create " + dir.string());

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["device_class"] = device_class_name(collection.device_class);
    manifest["units"] = canonical_units();
    manifest["provenance"] = collection.provenance;
    manifest["split"] = split_to_json(split);

    json devices = json::array();
    for (const LifeTest& lt : collection.devices) {
        const std::vector<Violation> violations = validate_lifetest(lt);
        if (!violations.empty())
            raise(Errc::ValidationError, "device " + lt.device_id + " invalid: " +
                                             violations.front().field + " " +
                                             violations.front().message);
        const fs::path device_rel = fs::path("devices") / lt.device_id;
        fs::create_directories(dir / device_rel, ec);
        if (ec)
            raise(Errc::IoError, "cannot create " + (dir / device_rel).string());

        json jdev;
        jdev["device_id"] = lt.device_id;
        jdev["metadata"] = lt.metadata;

        // indicators.csv: stage_id,indicator,value,unit
        {
            const fs::path rel = device_rel / "indicators.csv";
            std::ofstream out(dir / rel);
            if (!out)
                raise(Errc::IoError, "cannot write " + (dir / rel).string());
            out << "stage_id,indicator,value,unit\n";
            for (const CheckUp& cu : lt.checkups)
                for (const auto& [name, value] : present_indicators(cu.indicators))
                    out << cu.stage_id << "," << name << "," << csv::format_double(value) << ","
                        << indicator_unit(name) << "\n";
            jdev["indicators_file"] = rel.generic_string();
        }

        json jcheckups = json::array();
        for (std::size_t c = 0; c < lt.checkups.size(); ++c) {
            const CheckUp& cu = lt.checkups[c];
            const fs::path stage_rel = device_rel / stage_dir_name(c);
            fs::create_directories(dir / stage_rel, ec);
            if (ec)
                raise(Errc::IoError, "cannot create " + (dir / stage_rel).string());

            json jcu;
            jcu["stage_id"] = cu.stage_id;
            jcu["stage_time"] = cu.stage_time.value;
            jcu["stage_time_unit"] = cu.stage_time.unit;
            jcu["conditions"] = cu.conditions.values;
            json files = json::object();
            if (cu.eis) {
                const fs::path rel = stage_rel / "eis.csv";
                write_eis_csv(dir / rel, *cu.eis);
                files["eis"] = rel.generic_string();
            }
            if (cu.iv) {
                const fs::path rel = stage_rel / "iv.csv";
                write_curve_csv(dir / rel, *cu.iv);
                files["iv"] = rel.generic_string();
            }
            if (cu.cv) {
                const fs::path rel = stage_rel / "cv.csv";
                write_curve_csv(dir / rel, *cu.cv);
                files["cv"] = rel.generic_string();
            }
            if (cu.lsv) {
                const fs::path rel = stage_rel / "lsv.csv";
                write_curve_csv(dir / rel, *cu.lsv);
                files["lsv"] = rel.generic_string();
            }
            jcu["files"] = std::move(files);
            jcheckups.push_back(std::move(jcu));
        }
        jdev["checkups"] = std::move(jcheckups);
        devices.push_back(std::move(jdev));
    }
    manifest["devices"] = std::move(devices);

    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out)
        raise(Errc::IoError, "cannot write " + manifest_path.string());
    out << manifest.dump(2) << "\n";
    if (!out)
        raise(Errc::IoError, "write failed for " + manifest_path.string());
    return manifest_path;
}

std::pair<Collection, SplitSpec> load_dataset(const std::filesystem::path& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in)
        raise(Errc::ParseError, "cannot open " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        raise(Errc::ParseError, manifest_path.string() + ": " + e.what());
    }

    Collection collection;
    SplitSpec split;
    try {
        if (manifest.at("format_version").get<int>() != kFormatVersion)
            raise(Errc::SchemaError, "unsupported format_version");
        collection.device_class =
            device_class_from_name(manifest.at("device_class").get<std::string>());
        if (manifest.at("units") != json(canonical_units()))
            raise(Errc::SchemaError, "unit declarations differ from the canonical units");
        if (manifest.contains("provenance"))
            collection.provenance = manifest["provenance"].get<std::vector<std::string>>();
        const fs::path root = manifest_path.parent_path();

        for (const json& jdev : manifest.at("devices")) {
            LifeTest lt;
            lt.device_id = jdev.at("device_id").get<std::string>();
            lt.device_class = collection.device_class;
            if (jdev.contains("metadata"))
                lt.metadata = jdev["metadata"].get<std::map<std::string, std::string>>();

            for (const json& jcu : jdev.at("checkups")) {
                CheckUp cu;
                cu.stage_id = jcu.at("stage_id").get<std::string>();
                cu.stage_time.value = jcu.at("stage_time").get<double>();
                cu.stage_time.unit = jcu.at("stage_time_unit").get<std::string>();
                if (jcu.contains("conditions"))
                    cu.conditions.values =
                        jcu["conditions"].get<std::map<std::string, double>>();
                const json& files = jcu.at("files");
                if (files.contains("eis"))
                    cu.eis = read_eis_csv(root / files["eis"].get<std::string>());
                if (files.contains("iv"))
                    cu.iv = read_curve_csv(root / files["iv"].get<std::string>(), CurveKind::IV);
                if (files.contains("cv"))
                    cu.cv = read_curve_csv(root / files["cv"].get<std::string>(), CurveKind::CV);
                if (files.contains("lsv"))
                    cu.lsv = read_curve_csv(root / files["lsv"].get<std::string>(), CurveKind::LSV);
                lt.checkups.push_back(std::move(cu));
            }

            if (jdev.contains("indicators_file")) {
                const fs::path path = root / jdev["indicators_file"].get<std::string>();
                const csv::Table table = csv::read_table(path);
                const std::size_t cs = table.column("stage_id", path.string());
                const std::size_t cn = table.column("indicator", path.string());
                const std::size_t cv = table.column("value", path.string());
                const std::size_t cu_col = table.column("unit", path.string());
                for (const auto& row : table.rows) {
                    CheckUp* target = nullptr;
                    for (CheckUp& cu : lt.checkups)
                        if (cu.stage_id == row[cs]) target = &cu;
                    if (!target)
                        raise(Errc::SchemaError, path.string() + ": indicator row references unknown stage '" + row[cs] + "'");
                    if (row[cu_col] != indicator_unit(row[cn]))
                        raise(Errc::SchemaError, path.string() + ": unit '" + row[cu_col] +
                                                     "' for " + row[cn] + " != canonical '" +
                                                     indicator_unit(row[cn]) + "'");
                    indicator_slot(target->indicators, row[cn]) =
                        csv::parse_double(row[cv], path.string());
                }
            }
            collection.devices.push_back(std::move(lt));
        }
        split = split_from_json(manifest.at("split"));
    } catch (const json::exception& e) {
        raise(Errc::SchemaError, manifest_path.string() + ": " + e.what());
    }

    std::set<std::string> seen_ids;
    for (const LifeTest& lt : collection.devices) {
        if (!seen_ids.insert(lt.device_id).second)
            raise(Errc::ValidationError, "duplicate device id '" + lt.device_id + "'");
        const std::vector<Violation> violations = validate_lifetest(lt);
        if (!violations.empty())
            raise(Errc::ValidationError,
                  "device " + lt.device_id + ": " + violations.front().field + " " +
                      violations.front().message + " (+" +
                      std::to_string(violations.size() - 1) + " more)");
    }

    // split ids must resolve, and the three lists must be pairwise disjoint
    const auto train_sel = resolve_ids(collection, split.train_ids, "train");
    const auto test_sel = resolve_ids(collection, split.test_ids, "test");
    const auto excl_sel = resolve_ids(collection, split.exclusions, "exclusion");
    for (const auto& [device_id, sel] : train_sel) {
        const auto it = test_sel.find(device_id);
        if (it != test_sel.end() && overlaps(sel, it->second))
            raise(Errc::ValidationError, "train/test overlap on '" + device_id + "'");
    }
    for (const auto& [device_id, sel] : excl_sel) {
        const auto it1 = train_sel.find(device_id);
        if (it1 != train_sel.end() && overlaps(sel, it1->second))
            raise(Errc::ValidationError, "exclusions overlap train on '" + device_id + "'");
        const auto it2 = test_sel.find(device_id);
        if (it2 != test_sel.end() && overlaps(sel, it2->second))
            raise(Errc::ValidationError, "exclusions overlap test on '" + device_id + "'");
    }
    return {std::move(collection), std::move(split)};
}

std::pair<std::vector<LifeTest>, std::vector<LifeTest>> split(const Collection& collection,
                                                              const SplitSpec& spec) {
    const auto train_sel = resolve_ids(collection, spec.train_ids, "train");
    const auto test_sel = resolve_ids(collection, spec.test_ids, "test");
    const auto excl_sel = resolve_ids(collection, spec.exclusions, "exclusion");

    for (const auto& [device_id, sel] : train_sel) {
        const auto it = test_sel.find(device_id);
        if (it != test_sel.end() && overlaps(sel, it->second))
            raise(Errc::ValidationError, "train/test overlap on '" + device_id + "'");
    }
    for (const auto& [device_id, sel] : excl_sel) {
        const auto it1 = train_sel.find(device_id);
        if (it1 != train_sel.end() && overlaps(sel, it1->second))
            raise(Errc::ValidationError, "exclusions overlap train on '" + device_id + "'");
        const auto it2 = test_sel.find(device_id);
        if (it2 != test_sel.end() && overlaps(sel, it2->second))
            raise(Errc::ValidationError, "exclusions overlap test on '" + device_id + "'");
    }

    // exclusions are disjoint from both lists, so taking a side only needs
    // its own selection
    auto take = [&](const std::map<std::string, SplitSelection>& selection) {
        std::vector<LifeTest> out;
        for (const LifeTest& lt : collection.devices) {
            const auto it = selection.find(lt.device_id);
            if (it == selection.end()) continue;
            LifeTest copy;
            copy.device_id = lt.device_id;
            copy.device_class = lt.device_class;
            copy.metadata = lt.metadata;
            for (const CheckUp& cu : lt.checkups)
                if (it->second.selects(cu.stage_id)) copy.checkups.push_back(cu);
            if (!copy.checkups.empty()) out.push_back(std::move(copy));
        }
        return out;
    };
    return {take(train_sel), take(test_sel)};
}

std::vector<CheckUp> all_checkups(const std::vector<LifeTest>& devices) {
    std::vector<CheckUp> out;
    for (const LifeTest& lt : devices)
        for (const CheckUp& cu : lt.checkups) out.push_back(cu);
    return out;
}

}  // namespace lifetest::data
