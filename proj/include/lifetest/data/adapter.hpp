#pragma once

#include <filesystem>

#include "lifetest/data/dataset.hpp"

namespace lifetest::data {

// ---------------------------------------------------------------------------
// Configuration-driven adapter for raw (third-party) datasets. The adapter
// config is a JSON file that enumerates devices, check-ups, and the raw CSV
// files behind them, with per-file column mappings and unit scale factors:
//
// {
//   "device_class": "PEMFC",
//   "devices": [{
//     "device_id": "cell_01",
//     "metadata": {"pt_load_mg_cm2": "0.25"},
//     "checkups": [{
//       "stage_id": "s00", "stage_time": 0, "stage_time_unit": "cycles",
//       "conditions": {"t_out_c": 80},
//       "eis": {"path": "raw/cell01/eis_0.csv", "delimiter": ",",
//               "columns": {"frequency_hz": "freq",
//                            "re_mohm_cm2": "ReZ", "im_mohm_cm2": "ImZ"},
//               "scale": {"re_mohm_cm2": 1000, "im_mohm_cm2": 1000}},
//       "iv":  {"path": "...", "columns": {...}, "sort_by_x": true},
//       "cv":  {"path": "...", "columns": {...}, "anodic_branch": true},
//       "lsv": {"path": "...", "columns": {...}},
//       "indicators": {"i_lim": 0.21, "ecsa": 55.3}
//     }]
//   }],
//   "split": {"train_ids": [...], "test_ids": [...], "exclusions": [...]},
//   "notes": ["..."]
// }
//
// Curves are sorted by x when requested and deduplicated (first sample at
// each x wins); cyclic voltammetry loops can be reduced to the increasing-
// voltage branch of the final recorded cycle with "anodic_branch".
// ---------------------------------------------------------------------------

/// Converts a raw dataset into the canonical format under out_dir and
/// returns the written manifest path. Raw file paths in the config are
/// resolved against raw_root.
std::filesystem::path ingest_dataset(const std::filesystem::path& adapter_config,
                                     const std::filesystem::path& raw_root,
                                     const std::filesystem::path& out_dir);

/// Keeps the increasing-voltage branch of the final cycle of a voltage
/// sweep: the last maximal strictly-increasing run, made single-valued by
/// keeping the first sample at each voltage. Exposed for tests.
std::pair<Eigen::VectorXd, Eigen::VectorXd> anodic_branch(const Eigen::VectorXd& v,
                                                          const Eigen::VectorXd& i);

}  // namespace lifetest::data
