#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lifetest/core/types.hpp"

namespace lifetest::sisso {

/// One candidate two-point feature on a curve grid: |y[i] - y[j]| with i < j.
struct TwoPointFeature {
    std::int32_t i = 0;
    std::int32_t j = 0;
    bool operator==(const TwoPointFeature&) const = default;
};

/// Number of (i, j) pairs on a grid of n points: (n^2 - n) / 2.
inline std::int64_t two_point_count(std::int64_t n) { return n * (n - 1) / 2; }

/// Column index of pair (i, j), i < j, in lexicographic order.
std::int32_t pair_to_column(std::int32_t n, std::int32_t i, std::int32_t j);
TwoPointFeature column_to_pair(std::int32_t n, std::int32_t column);

/// A curve grid identity: kind plus the exact x values. Formulas only
/// evaluate on curves whose grid matches.
struct GridIdentity {
    CurveKind kind = CurveKind::DeltaVI;
    Eigen::VectorXd x;

    bool matches(const SampledCurve& curve) const;
};

struct CandidateFeatureSet {
    GridIdentity grid;
    std::vector<TwoPointFeature> features;  // (i, j) lexicographic
    Eigen::MatrixXd design;                 // rows = curves, cols = features
};

/// Enumerates every two-point feature over curves sharing one grid: exactly
/// (n^2 - n)/2 columns in lexicographic (i, j) order, entry |y_i - y_j|.
/// Raises GridMismatch unless all curves have identical kind and x values.
CandidateFeatureSet enumerate_two_point_features(const std::vector<SampledCurve>& curves);

struct ScreenRank {
    std::int32_t column = 0;
    double score = 0.0;  // |Pearson correlation| with the target
};

/// Sure-independence screening: the top screen_size candidate columns by
/// absolute correlation with the target, descending; constant columns are
/// excluded and score ties keep the lower column. Raises ConstantTarget.
std::vector<ScreenRank> sis_screen(const CandidateFeatureSet& candidates,
                                   const Eigen::VectorXd& target, int screen_size);

struct SissoConfig {
    bool op_plus = true;
    bool op_minus = true;
    int n_expansion = 2;   // expansion rounds over the screened pool
    int k = 6;             // max distinct primitive features in the formula
    int screen_size = 50;  // survivors kept per screening pass
    std::uint64_t seed = 0;  // reserved; the search itself is exhaustive
};

/// A +/- expression over candidate columns in canonical form: a signed
/// multiset of columns, sorted by column, zero coefficients dropped.
struct FeatureExpr {
    std::vector<std::pair<std::int32_t, std::int32_t>> terms;  // (column, coeff)

    int distinct_leaves() const { return static_cast<int>(terms.size()); }
    bool operator==(const FeatureExpr&) const = default;
};

struct PoolEntry {
    FeatureExpr expr;
    Eigen::VectorXd values;  // per training row
    double score = 0.0;      // |correlation| with the target
};

/// Seeds a pool from sis_screen, then runs cfg.n_expansion rounds: every
/// normalized pair of pool members is combined with the enabled operators,
/// algebraically identical expressions are pruned, and each round's new
/// expressions are re-screened to cfg.screen_size by absolute correlation.
/// Returns the union of all surviving expressions, in creation order.
std::vector<PoolEntry> expand(const CandidateFeatureSet& candidates,
                              const Eigen::VectorXd& target, const SissoConfig& cfg);

struct FormulaTerm {
    TwoPointFeature feature;
    std::int32_t coeff = 1;
};

/// The selected descriptor: a +/- composition of two-point features with a
/// linear calibration (slope, intercept) fitted against the training target.
struct FeatureFormula {
    GridIdentity grid;
    std::vector<FormulaTerm> terms;
    double slope = 1.0;
    double intercept = 0.0;
    double train_r2 = 0.0;

    /// Human-readable form, e.g. "|y[4]-y[17]| - |y[2]-y[9]|".
    std::string str() const;
};

/// Sparsifying-operator step: among pool expressions with at most k distinct
/// primitive leaves, returns the one whose 1-D least-squares fit to the
/// target has the highest R^2 (ties keep the earliest pool entry).
/// Raises EmptyFeasibleSet when no expression qualifies.
FeatureFormula so_select(const std::vector<PoolEntry>& pool,
                         const CandidateFeatureSet& candidates,
                         const Eigen::VectorXd& target, int k);

/// sis_screen + expand + so_select in one call.
FeatureFormula fit_formula(const CandidateFeatureSet& candidates,
                           const Eigen::VectorXd& target, const SissoConfig& cfg);

/// Raw formula value on a curve (calibration is metadata, not applied).
/// Raises GridMismatch when the curve's grid differs from the formula's.
double evaluate_formula(const FeatureFormula& formula, const SampledCurve& curve);

}  // namespace lifetest::sisso
