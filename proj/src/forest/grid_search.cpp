#include "lifetest/forest/grid_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lifetest/core/error.hpp"
#include "lifetest/util/parallel.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::forest {

HyperGrid HyperGrid::default_grid() {
    HyperGrid g;
    g.n_estimators = {50, 100, 150, 200, 250, 300};
    g.max_depth = {5, 10, 15, 20, 25, 30};
    g.min_samples_leaf = {1, 2, 3, 4, 5};
    g.max_features = {MaxFeatures::all(),      MaxFeatures::sqrt(),
                      MaxFeatures::frac(0.33), MaxFeatures::frac(0.5),
                      MaxFeatures::frac(0.75), MaxFeatures::frac(1.0)};
    return g;
}

GridSearchResult grid_search_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const HyperGrid& grid, int folds, std::uint64_t seed,
                                int threads) {
    if (folds < 2)
        raise(Errc::ConfigError, "grid search requires folds >= 2");
    const Eigen::Index n = X.rows();
    if (n < folds)
        raise(Errc::TooFewSamples, "grid search needs at least `folds` samples");
    if (grid.n_estimators.empty() || grid.max_depth.empty() || grid.min_samples_leaf.empty() ||
        grid.max_features.empty())
        raise(Errc::ConfigError, "grid axes must be nonempty");

    // seeded shuffle split into `folds` contiguous chunks
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0xf01d));
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded_index(rng, i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::pair<std::size_t, std::size_t>> fold_ranges;  // [begin, end) into order
    {
        const std::size_t base = order.size() / static_cast<std::size_t>(folds);
        const std::size_t extra = order.size() % static_cast<std::size_t>(folds);
        std::size_t begin = 0;
        for (int f = 0; f < folds; ++f) {
            const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
            fold_ranges.emplace_back(begin, begin + len);
            begin += len;
        }
    }

    // combination list in grid order
    struct Combo {
        int n_estimators, max_depth, min_samples_leaf;
        MaxFeatures max_features;
        std::size_t mf_index;
    };
    std::vector<Combo> combos;
    combos.reserve(grid.n_combinations());
    for (const int ne : grid.n_estimators)
        for (const int md : grid.max_depth)
            for (const int msl : grid.min_samples_leaf)
                for (std::size_t mf = 0; mf < grid.max_features.size(); ++mf)
                    combos.push_back({ne, md, msl, grid.max_features[mf], mf});

    GridSearchResult result;
    result.folds = folds;
    result.seed = seed;
    result.table.resize(combos.size());

    parallel_for(combos.size(), threads, [&](std::size_t ci) {
        const Combo& combo = combos[ci];
        GridSearchRow row;
        row.n_estimators = combo.n_estimators;
        row.max_depth = combo.max_depth;
        row.min_samples_leaf = combo.min_samples_leaf;
        row.max_features = combo.max_features;

        for (int f = 0; f < folds; ++f) {
            const auto [vb, ve] = fold_ranges[static_cast<std::size_t>(f)];
            const auto n_val = static_cast<Eigen::Index>(ve - vb);
            const Eigen::Index n_train = n - n_val;
            Eigen::MatrixXd Xt(n_train, X.cols()), Xv(n_val, X.cols());
            Eigen::VectorXd yt(n_train), yv(n_val);
            Eigen::Index ti = 0, vi = 0;
            for (std::size_t p = 0; p < order.size(); ++p) {
                if (p >= vb && p < ve) {
                    Xv.row(vi) = X.row(order[p]);
                    yv[vi++] = y[order[p]];
                } else {
                    Xt.row(ti) = X.row(order[p]);
                    yt[ti++] = y[order[p]];
                }
            }
            ForestParams params;
            params.n_estimators = combo.n_estimators;
            params.tree.max_depth = combo.max_depth;
            params.tree.min_samples_leaf = combo.min_samples_leaf;
            params.tree.max_features = combo.max_features;
            params.seed = derive_seed(seed, ci, static_cast<std::uint64_t>(f));
            const Forest forest = fit_forest(Xt, yt, params, 1);
            const Eigen::VectorXd pred = predict(forest, Xv);
            row.fold_rmse.push_back(std::sqrt((yv - pred).squaredNorm() / static_cast<double>(n_val)));
        }
        row.mean_rmse =
            std::accumulate(row.fold_rmse.begin(), row.fold_rmse.end(), 0.0) / folds;
        result.table[ci] = std::move(row);
    });

    std::size_t best = 0;
    auto better = [&](std::size_t a, std::size_t b) {
        const GridSearchRow& ra = result.table[a];
        const GridSearchRow& rb = result.table[b];
        if (ra.mean_rmse != rb.mean_rmse) return ra.mean_rmse < rb.mean_rmse;
        if (ra.n_estimators != rb.n_estimators) return ra.n_estimators < rb.n_estimators;
        if (ra.max_depth != rb.max_depth) return ra.max_depth < rb.max_depth;
        if (ra.min_samples_leaf != rb.min_samples_leaf)
            return ra.min_samples_leaf > rb.min_samples_leaf;
        return combos[a].mf_index < combos[b].mf_index;
    };
    for (std::size_t ci = 1; ci < result.table.size(); ++ci)
        if (better(ci, best)) best = ci;

    const GridSearchRow& won = result.table[best];
    result.best.n_estimators = won.n_estimators;
    result.best.tree.max_depth = won.max_depth;
    result.best.tree.min_samples_leaf = won.min_samples_leaf;
    result.best.tree.max_features = won.max_features;
    result.best.seed = seed;
    return result;
}

}  // namespace lifetest::forest
