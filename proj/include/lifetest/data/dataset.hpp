#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "lifetest/core/types.hpp"

namespace lifetest::data {

/// A loaded dataset: one device class, validated devices.
struct Collection {
    DeviceClass device_class = DeviceClass::PEMFC;
    std::vector<LifeTest> devices;
    std::vector<std::string> provenance;
};

// ---------------------------------------------------------------------------
// Canonical on-disk format (format_version 1)
//
//   <dir>/manifest.json
//   <dir>/devices/<device_id>/indicators.csv        stage_id,indicator,value,unit
//   <dir>/devices/<device_id>/<stage_id>/eis.csv    frequency_hz,re_mohm_cm2,im_mohm_cm2
//   <dir>/devices/<device_id>/<stage_id>/iv.csv     current_density_a_cm2,voltage_v
//   <dir>/devices/<device_id>/<stage_id>/cv.csv     voltage_v,current_density_a_cm2
//   <dir>/devices/<device_id>/<stage_id>/lsv.csv    voltage_v,current_density_a_cm2
//
// All numbers are decimal text with '.' radix and no thousands separators;
// files are UTF-8 with LF line endings and a mandatory header row. The
// manifest carries device metadata, per-check-up stage times and test
// conditions, relative file references, the split, and provenance notes.
// ---------------------------------------------------------------------------

/// Loads and fully validates a canonical dataset. Raises ParseError /
/// SchemaError / ValidationError.
std::pair<Collection, SplitSpec> load_dataset(const std::filesystem::path& manifest_path);

/// Writes a collection in the canonical format; returns the manifest path.
/// load_dataset(write_dataset(c)) reproduces c exactly (value equality,
/// bit-exact numbers).
std::filesystem::path write_dataset(const Collection& collection, const SplitSpec& split,
                                    const std::filesystem::path& dir);

/// Applies a split. Ids are device ids, or "device_id:stage_id" to place a
/// single check-up (per-check-up splits for single-device datasets).
/// Exclusions are dropped; unknown ids raise UnknownId.
std::pair<std::vector<LifeTest>, std::vector<LifeTest>> split(const Collection& collection,
                                                              const SplitSpec& spec);

/// Every check-up of every device, flattened in device order.
std::vector<CheckUp> all_checkups(const std::vector<LifeTest>& devices);

}  // namespace lifetest::data
