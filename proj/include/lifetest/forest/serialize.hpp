#pragma once

#include "json.hpp"
#include "lifetest/forest/grid_search.hpp"

namespace lifetest::forest {

/// Lossless JSON records: numbers round-trip bit-exactly, so a reloaded
/// forest predicts identically.
nlohmann::json params_to_json(const ForestParams& params);
ForestParams params_from_json(const nlohmann::json& j);

nlohmann::json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const HyperGrid& grid);
HyperGrid grid_from_json(const nlohmann::json& j);

}  // namespace lifetest::forest
