#include "lifetest/forest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lifetest/core/error.hpp"
#include "lifetest/util/parallel.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::forest {

int MaxFeatures::resolve(int n_features) const {
    int m = n_features;
    switch (mode) {
        case Mode::All:
            m = n_features;
            break;
        case Mode::Sqrt:
            m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
            break;
        case Mode::Fraction:
            m = static_cast<int>(std::ceil(fraction * n_features));
            break;
    }
    return std::clamp(m, 1, n_features);
}

std::string MaxFeatures::str() const {
    switch (mode) {
        case Mode::All: return "all";
        case Mode::Sqrt: return "sqrt";
        case Mode::Fraction: return std::to_string(fraction);
    }
    return "?";
}

MaxFeatures MaxFeatures::parse(const std::string& text) {
    if (text == "all" || text == "auto") return all();
    if (text == "sqrt") return sqrt();
    try {
        const double f = std::stod(text);
        if (f > 0.0 && f <= 1.0) return frac(f);
    } catch (const std::exception&) {
    }
    raise(Errc::ConfigError, "bad max_features value '" + text + "'");
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    std::int32_t idx = 0;
    for (;;) {
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        if (node.is_leaf()) return node.value;
        idx = row[node.feature] < node.threshold ? node.left : node.right;
    }
}

namespace {

void check_training_input(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() == 0 || X.cols() == 0)
        raise(Errc::EmptyInput, "training data is empty");
    if (X.rows() != y.size())
        raise(Errc::DimensionMismatch, "X rows != y length");
    if (!X.allFinite() || !y.allFinite())
        raise(Errc::NonFiniteInput, "training data has non-finite values");
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeParams& params,
                std::uint64_t seed)
        : X_(X), y_(y), params_(params), seed_(seed) {
        order_.resize(static_cast<std::size_t>(X.rows()));
        std::iota(order_.begin(), order_.end(), 0);
        scratch_.resize(order_.size());
        feature_pool_.resize(static_cast<std::size_t>(X.cols()));
    }

    RegressionTree build() {
        RegressionTree tree;
        nodes_ = &tree.nodes;
        grow(0, static_cast<Eigen::Index>(order_.size()), 0);
        nodes_ = nullptr;
        return tree;
    }

private:
    struct Split {
        double score = -std::numeric_limits<double>::infinity();
        int feature = -1;
        double threshold = 0.0;
    };

    // Grows the node owning order_[lo, hi) and returns its index (pre-order).
    std::int32_t grow(Eigen::Index lo, Eigen::Index hi, int depth) {
        const auto node_index = static_cast<std::int32_t>(nodes_->size());
        nodes_->push_back({});

        const Eigen::Index count = hi - lo;
        double sum = 0.0;
        double y_lo = y_[order_[static_cast<std::size_t>(lo)]];
        double y_hi = y_lo;
        for (Eigen::Index p = lo; p < hi; ++p) {
            const double v = y_[order_[static_cast<std::size_t>(p)]];
            sum += v;
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
        const double mean = sum / static_cast<double>(count);

        TreeNode& node = (*nodes_)[static_cast<std::size_t>(node_index)];
        node.value = mean;
        node.n_samples = static_cast<std::int32_t>(count);

        const bool splittable = depth < params_.max_depth &&
                                count >= 2 * params_.min_samples_leaf && y_lo != y_hi;
        if (!splittable) return node_index;

        const Split split = find_best_split(lo, hi, node_index, sum);
        if (split.feature < 0) return node_index;

        auto* base = order_.data();
        auto* mid_it = std::stable_partition(base + lo, base + hi, [&](Eigen::Index row) {
            return X_(row, split.feature) < split.threshold;
        });
        const Eigen::Index mid = mid_it - base;
        // a valid split always separates the range
        const std::int32_t left = grow(lo, mid, depth + 1);
        const std::int32_t right = grow(mid, hi, depth + 1);

        TreeNode& finished = (*nodes_)[static_cast<std::size_t>(node_index)];
        finished.feature = split.feature;
        finished.threshold = split.threshold;
        finished.left = left;
        finished.right = right;
        return node_index;
    }

    Split find_best_split(Eigen::Index lo, Eigen::Index hi, std::int32_t node_index,
                          double sum_total) {
        const Eigen::Index count = hi - lo;
        const int d = static_cast<int>(X_.cols());
        const int m = params_.max_features.resolve(d);

        // per-node feature subset, drawn without replacement
        std::mt19937_64 rng = make_rng(derive_seed(seed_, static_cast<std::uint64_t>(node_index)));
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
        for (int i = 0; i < m; ++i) {
            const auto j = i + static_cast<int>(bounded_index(rng, static_cast<std::uint64_t>(d - i)));
            std::swap(feature_pool_[static_cast<std::size_t>(i)],
                      feature_pool_[static_cast<std::size_t>(j)]);
        }

        Split best;
        const int min_leaf = params_.min_samples_leaf;
        for (int fi = 0; fi < m; ++fi) {
            const int feature = feature_pool_[static_cast<std::size_t>(fi)];
            auto* sc = scratch_.data();
            std::copy(order_.data() + lo, order_.data() + hi, sc);
            std::stable_sort(sc, sc + count, [&](Eigen::Index a, Eigen::Index b) {
                return X_(a, feature) < X_(b, feature);
            });

            double sum_left = 0.0;
            for (Eigen::Index p = 0; p + 1 < count; ++p) {
                sum_left += y_[sc[p]];
                const double xv = X_(sc[p], feature);
                const double xn = X_(sc[p + 1], feature);
                if (xv == xn) continue;
                const Eigen::Index n_left = p + 1;
                const Eigen::Index n_right = count - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double threshold = xv + (xn - xv) / 2.0;
                if (!(threshold > xv) || !(threshold <= xn)) continue;  // adjacent doubles
                const double sum_right = sum_total - sum_left;
                const double score = sum_left * sum_left / static_cast<double>(n_left) +
                                     sum_right * sum_right / static_cast<double>(n_right);
                if (score > best.score) {
                    best.score = score;
                    best.feature = feature;
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    TreeParams params_;
    std::uint64_t seed_;
    std::vector<Eigen::Index> order_;
    std::vector<Eigen::Index> scratch_;
    std::vector<int> feature_pool_;
    std::vector<TreeNode>* nodes_ = nullptr;
};

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const TreeParams& params, std::uint64_t seed) {
    check_training_input(X, y);
    if (params.max_depth < 1 || params.min_samples_leaf < 1)
        raise(Errc::ConfigError, "tree requires max_depth >= 1 and min_samples_leaf >= 1");
    return TreeBuilder(X, y, params, seed).build();
}

Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ForestParams& params, int threads) {
    check_training_input(X, y);
    if (params.n_estimators < 1)
        raise(Errc::ConfigError, "forest requires n_estimators >= 1");
    if (!(params.tree.bootstrap_fraction > 0.0) || params.tree.bootstrap_fraction > 1.0)
        raise(Errc::ConfigError, "bootstrap_fraction must be in (0, 1]");

    const Eigen::Index n = X.rows();
    const auto n_boot = static_cast<Eigen::Index>(
        std::ceil(params.tree.bootstrap_fraction * static_cast<double>(n)));

    Forest forest;
    forest.params = params;
    forest.n_features = static_cast<int>(X.cols());
    forest.y_min = y.minCoeff();
    forest.y_max = y.maxCoeff();
    forest.trees.resize(static_cast<std::size_t>(params.n_estimators));

    parallel_for(static_cast<std::size_t>(params.n_estimators), threads, [&](std::size_t t) {
        std::mt19937_64 rng = make_rng(derive_seed(params.seed, t, 0));
        Eigen::MatrixXd Xb(n_boot, X.cols());
        Eigen::VectorXd yb(n_boot);
        for (Eigen::Index i = 0; i < n_boot; ++i) {
            const auto row = static_cast<Eigen::Index>(bounded_index(rng, static_cast<std::uint64_t>(n)));
            Xb.row(i) = X.row(row);
            yb[i] = y[row];
        }
        forest.trees[t] = TreeBuilder(Xb, yb, params.tree, derive_seed(params.seed, t, 1)).build();
    });
    return forest;
}

double predict_row(const Forest& forest, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if (row.size() != forest.n_features)
        raise(Errc::DimensionMismatch, "query has wrong feature count");
    double sum = 0.0;
    for (const RegressionTree& tree : forest.trees) sum += tree.predict_row(row);
    return sum / static_cast<double>(forest.trees.size());
}

Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& X) {
    if (X.cols() != forest.n_features)
        raise(Errc::DimensionMismatch, "query has wrong feature count");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(forest, X.row(i));
    return out;
}

std::vector<Forest> fit_multi_target(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                     const ForestParams& params, int threads) {
    if (Y.rows() != X.rows())
        raise(Errc::DimensionMismatch, "X rows != Y rows");
    if (Y.cols() == 0)
        raise(Errc::EmptyInput, "no target columns");
    std::vector<Forest> forests(static_cast<std::size_t>(Y.cols()));
    // one derived seed per target; trees within a target run serially so the
    // whole set is deterministic for any thread count
    parallel_for(static_cast<std::size_t>(Y.cols()), threads, [&](std::size_t c) {
        ForestParams p = params;
        p.seed = derive_seed(params.seed, c, 0x7a26);
        forests[c] = fit_forest(X, Y.col(static_cast<Eigen::Index>(c)), p, 1);
    });
    return forests;
}

}  // namespace lifetest::forest
