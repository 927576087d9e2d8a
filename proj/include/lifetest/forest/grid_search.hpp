#pragma once

#include "lifetest/forest/forest.hpp"

namespace lifetest::forest {

/// Exhaustive hyperparameter search space. Every combination of the four
/// axes is evaluated; bootstrap_fraction is fixed at 1.0 and not searched.
struct HyperGrid {
    std::vector<int> n_estimators;
    std::vector<int> max_depth;
    std::vector<int> min_samples_leaf;
    std::vector<MaxFeatures> max_features;

    std::size_t n_combinations() const {
        return n_estimators.size() * max_depth.size() * min_samples_leaf.size() *
               max_features.size();
    }

    /// The default 1080-combination search space:
    /// n_estimators {50..300}, max_depth {5..30}, min_samples_leaf {1..5},
    /// max_features {all, sqrt, 0.33, 0.5, 0.75, 1.0}.
    static HyperGrid default_grid();
};

struct GridSearchRow {
    int n_estimators = 0;
    int max_depth = 0;
    int min_samples_leaf = 0;
    MaxFeatures max_features{};
    double mean_rmse = 0.0;
    std::vector<double> fold_rmse;
};

struct GridSearchResult {
    ForestParams best;
    std::vector<GridSearchRow> table;  // one row per combination, grid order
    int folds = 0;
    std::uint64_t seed = 0;
};

/// K-fold cross-validated search over every grid combination. Fold
/// assignment is a seeded shuffle split into `folds` contiguous chunks; the
/// winner is the lowest mean validation RMSE with ties broken by fewer
/// trees, then shallower depth, then larger min_samples_leaf, then
/// max_features list order.
GridSearchResult grid_search_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const HyperGrid& grid, int folds, std::uint64_t seed,
                                int threads = 1);

}  // namespace lifetest::forest
