#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lifetest::forest {

/// Number of features drawn at each split.
struct MaxFeatures {
    enum class Mode { All, Sqrt, Fraction };

    Mode mode = Mode::All;
    double fraction = 1.0;  // used by Mode::Fraction, in (0, 1]

    static MaxFeatures all() { return {Mode::All, 1.0}; }
    static MaxFeatures sqrt() { return {Mode::Sqrt, 1.0}; }
    static MaxFeatures frac(double f) { return {Mode::Fraction, f}; }

    /// All -> d; Sqrt -> ceil(sqrt(d)); Fraction f -> ceil(f*d), at least 1.
    int resolve(int n_features) const;

    std::string str() const;
    static MaxFeatures parse(const std::string& text);
    bool operator==(const MaxFeatures&) const = default;
};

struct TreeParams {
    int max_depth = 10;           // splits allowed while node depth < max_depth
    int min_samples_leaf = 1;
    MaxFeatures max_features{};
    double bootstrap_fraction = 1.0;  // of n, rows drawn with replacement
};

struct ForestParams {
    int n_estimators = 200;
    TreeParams tree{};
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] < threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         // leaf mean (kept for internal nodes too)
    std::int32_t n_samples = 0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // pre-order; nodes[0] is the root

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Grows one CART regression tree with greedy variance-reduction splits.
/// The feature subset of every node is drawn from a generator seeded by
/// (seed, node index), so the tree is a pure function of its inputs.
/// Splitting stops at max_depth, min_samples_leaf, or zero target variance;
/// thresholds are midpoints between adjacent distinct feature values.
RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const TreeParams& params, std::uint64_t seed);

struct Forest {
    std::vector<RegressionTree> trees;
    ForestParams params;
    int n_features = 0;
    double y_min = 0.0;  // training-target range; predictions stay inside it
    double y_max = 0.0;
};

/// Trains n_estimators trees, each on ceil(bootstrap_fraction*n) rows drawn
/// with replacement from a generator seeded by (params.seed, tree index).
/// The result is identical for any thread count.
Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ForestParams& params, int threads = 1);

double predict_row(const Forest& forest, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& X);

/// Independent forest per column of Y, seeded by (params.seed, target index).
std::vector<Forest> fit_multi_target(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                     const ForestParams& params, int threads = 1);

}  // namespace lifetest::forest
