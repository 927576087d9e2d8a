#include "lifetest/forest/serialize.hpp"

#include "lifetest/core/error.hpp"

namespace lifetest::forest {

using nlohmann::json;

json params_to_json(const ForestParams& params) {
    return json{{"n_estimators", params.n_estimators},
                {"max_depth", params.tree.max_depth},
                {"min_samples_leaf", params.tree.min_samples_leaf},
                {"max_features", params.tree.max_features.str()},
                {"bootstrap_fraction", params.tree.bootstrap_fraction},
                {"seed", params.seed}};
}

ForestParams params_from_json(const json& j) {
    ForestParams p;
    p.n_estimators = j.at("n_estimators").get<int>();
    p.tree.max_depth = j.at("max_depth").get<int>();
    p.tree.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    p.tree.max_features = MaxFeatures::parse(j.at("max_features").get<std::string>());
    p.tree.bootstrap_fraction = j.at("bootstrap_fraction").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json forest_to_json(const Forest& forest) {
    json trees = json::array();
    for (const RegressionTree& tree : forest.trees) {
        json t;
        auto& feature = t["feature"] = json::array();
        auto& threshold = t["threshold"] = json::array();
        auto& left = t["left"] = json::array();
        auto& right = t["right"] = json::array();
        auto& value = t["value"] = json::array();
        auto& count = t["count"] = json::array();
        for (const TreeNode& node : tree.nodes) {
            feature.push_back(node.feature);
            threshold.push_back(node.threshold);
            left.push_back(node.left);
            right.push_back(node.right);
            value.push_back(node.value);
            count.push_back(node.n_samples);
        }
        trees.push_back(std::move(t));
    }
    return json{{"params", params_to_json(forest.params)},
                {"n_features", forest.n_features},
                {"y_min", forest.y_min},
                {"y_max", forest.y_max},
                {"trees", std::move(trees)}};
}

Forest forest_from_json(const json& j) {
    Forest forest;
    forest.params = params_from_json(j.at("params"));
    forest.n_features = j.at("n_features").get<int>();
    forest.y_min = j.at("y_min").get<double>();
    forest.y_max = j.at("y_max").get<double>();
    for (const json& t : j.at("trees")) {
        const auto& feature = t.at("feature");
        const auto& threshold = t.at("threshold");
        const auto& left = t.at("left");
        const auto& right = t.at("right");
        const auto& value = t.at("value");
        const auto& count = t.at("count");
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n ||
            value.size() != n || count.size() != n)
            raise(Errc::SchemaError, "tree record arrays have unequal lengths");
        RegressionTree tree;
        tree.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            tree.nodes[i].feature = feature[i].get<std::int32_t>();
            tree.nodes[i].threshold = threshold[i].get<double>();
            tree.nodes[i].left = left[i].get<std::int32_t>();
            tree.nodes[i].right = right[i].get<std::int32_t>();
            tree.nodes[i].value = value[i].get<double>();
            tree.nodes[i].n_samples = count[i].get<std::int32_t>();
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

json grid_to_json(const HyperGrid& grid) {
    json mf = json::array();
    for (const MaxFeatures& m : grid.max_features) mf.push_back(m.str());
    return json{{"n_estimators", grid.n_estimators},
                {"max_depth", grid.max_depth},
                {"min_samples_leaf", grid.min_samples_leaf},
                {"max_features", std::move(mf)}};
}

HyperGrid grid_from_json(const json& j) {
    HyperGrid grid;
    grid.n_estimators = j.at("n_estimators").get<std::vector<int>>();
    grid.max_depth = j.at("max_depth").get<std::vector<int>>();
    grid.min_samples_leaf = j.at("min_samples_leaf").get<std::vector<int>>();
    for (const json& m : j.at("max_features"))
        grid.max_features.push_back(MaxFeatures::parse(m.get<std::string>()));
    return grid;
}

}  // namespace lifetest::forest
