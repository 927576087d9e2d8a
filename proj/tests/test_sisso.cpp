#include <catch2/catch_amalgamated.hpp>

#include "lifetest/core/error.hpp"
#include "lifetest/sisso/sisso.hpp"
#include "lifetest/util/rng.hpp"

using namespace lifetest;
using sisso::CandidateFeatureSet;
using sisso::FeatureFormula;
using sisso::SissoConfig;

namespace {

std::vector<SampledCurve> random_delta_curves(int n_curves, int n_points, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    Eigen::VectorXd x(n_points);
    for (int i = 0; i < n_points; ++i) x[i] = 0.1 * i;
    std::vector<SampledCurve> curves;
    for (int c = 0; c < n_curves; ++c) {
        Eigen::VectorXd y(n_points);
        for (int i = 0; i < n_points; ++i) y[i] = uniform_real(rng, -1.0, 1.0);
        curves.push_back(make_curve(CurveKind::DeltaVI, x, y));
    }
    return curves;
}

/// Recursive tree evaluation: left-fold of the flattened terms, one signed
/// leaf at a time, mirroring an explicit +/- expression tree.
double recursive_eval(const FeatureFormula& formula, const SampledCurve& curve,
                      std::size_t upto) {
    const auto leaf = [&](std::size_t t) {
        const auto& term = formula.terms[t];
        return static_cast<double>(term.coeff) *
               std::abs(curve.y[term.feature.i] - curve.y[term.feature.j]);
    };
    if (upto == 0) return leaf(0);
    return recursive_eval(formula, curve, upto - 1) + leaf(upto);
}

}  // namespace

TEST_CASE("two-point enumeration counts follow (n^2-n)/2", "[sisso][enumerate]") {
    for (const int n : {5, 20, 51, 100}) {
        const auto curves = random_delta_curves(3, n, 100 + n);
        const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
        const auto expected = static_cast<Eigen::Index>(n) * (n - 1) / 2;
        CHECK(set.design.cols() == expected);
        CHECK(static_cast<Eigen::Index>(set.features.size()) == expected);
        CHECK(set.design.rows() == 3);
        // lexicographic order with i < j
        CHECK(set.features.front().i == 0);
        CHECK(set.features.front().j == 1);
        CHECK(set.features.back().i == n - 2);
        CHECK(set.features.back().j == n - 1);
    }
}

TEST_CASE("constant curves produce all-zero features", "[sisso][enumerate]") {
    auto curves = random_delta_curves(1, 10, 7);
    curves[0].y.setConstant(4.2);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    CHECK(set.design.row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pair/column index mapping round-trips", "[sisso][enumerate]") {
    const std::int32_t n = 23;
    std::int32_t column = 0;
    for (std::int32_t i = 0; i < n; ++i)
        for (std::int32_t j = i + 1; j < n; ++j, ++column) {
            CHECK(sisso::pair_to_column(n, i, j) == column);
            const auto pair = sisso::column_to_pair(n, column);
            CHECK(pair.i == i);
            CHECK(pair.j == j);
        }
}

TEST_CASE("mismatched grids are rejected", "[sisso][enumerate]") {
    auto curves = random_delta_curves(2, 10, 9);
    curves[1].x[3] += 1e-9;
    CHECK_THROWS_MATCHES(sisso::enumerate_two_point_features(curves), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::GridMismatch; }));
}

TEST_CASE("screening ranks an exactly matching candidate first", "[sisso][screen]") {
    const auto curves = random_delta_curves(20, 8, 13);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    const Eigen::VectorXd target = set.design.col(5);
    const auto ranked = sisso::sis_screen(set, target, 10);
    REQUIRE_FALSE(ranked.empty());
    CHECK(ranked.front().column == 5);
    CHECK(ranked.front().score == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("screening keeps every nonconstant column when unrestricted", "[sisso][screen]") {
    auto curves = random_delta_curves(15, 6, 21);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    Eigen::VectorXd target(15);
    std::mt19937_64 rng = make_rng(3);
    for (int i = 0; i < 15; ++i) target[i] = uniform_real(rng, -1, 1);
    const auto ranked = sisso::sis_screen(set, target, 10000);
    CHECK(ranked.size() == set.features.size());  // random curves: no constants
    for (std::size_t i = 1; i < ranked.size(); ++i)
        CHECK(ranked[i - 1].score >= ranked[i].score);
}

TEST_CASE("screening finds a planted noisy candidate", "[sisso][screen][oracle]") {
    const auto curves = random_delta_curves(28, 12, 31);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    std::mt19937_64 rng = make_rng(77);
    Eigen::VectorXd target = set.design.col(7);
    for (int i = 0; i < 28; ++i) target[i] += 0.01 * gaussian(rng);

    // exhaustive correlation scan (the oracle) agrees with the screen order
    const auto ranked = sisso::sis_screen(set, target, 3);
    bool found = false;
    for (const auto& r : ranked) found |= r.column == 7;
    CHECK(found);
}

TEST_CASE("constant target is rejected", "[sisso][screen]") {
    const auto curves = random_delta_curves(6, 5, 37);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    CHECK_THROWS_MATCHES(sisso::sis_screen(set, Eigen::VectorXd::Constant(6, 1.0), 5), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::ConstantTarget; }));
}

TEST_CASE("expansion with zero rounds returns the screened primitives", "[sisso][expand]") {
    const auto curves = random_delta_curves(12, 6, 41);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    Eigen::VectorXd target = set.design.col(0) - set.design.col(3);
    SissoConfig config;
    config.n_expansion = 0;
    config.screen_size = 5;
    const auto pool = sisso::expand(set, target, config);
    REQUIRE(pool.size() == 5);
    for (const auto& entry : pool) CHECK(entry.expr.distinct_leaves() == 1);
}

TEST_CASE("one expansion round forms sums and both differences", "[sisso][expand]") {
    // a 3-point grid has exactly three candidate columns; an unrestricted
    // screen keeps every formed expression
    const auto curves = random_delta_curves(10, 3, 43);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    Eigen::VectorXd target(10);
    std::mt19937_64 rng = make_rng(5);
    for (int i = 0; i < 10; ++i) target[i] = uniform_real(rng, -1, 1);

    SissoConfig config;
    config.n_expansion = 1;
    config.screen_size = 100;
    const auto pool = sisso::expand(set, target, config);
    REQUIRE(pool.size() >= 2);
    const auto col_a = pool[0].expr.terms[0].first;
    const auto col_b = pool[1].expr.terms[0].first;
    auto contains = [&](const std::vector<std::pair<std::int32_t, std::int32_t>>& terms) {
        for (const auto& entry : pool)
            if (entry.expr.terms == terms) return true;
        return false;
    };
    using Terms = std::vector<std::pair<std::int32_t, std::int32_t>>;
    const auto lo = std::min(col_a, col_b);
    const auto hi = std::max(col_a, col_b);
    CHECK(contains(Terms{{lo, 1}, {hi, 1}}));    // a + b
    CHECK(contains(Terms{{lo, 1}, {hi, -1}}));   // a - b
    CHECK(contains(Terms{{lo, -1}, {hi, 1}}));   // b - a
}

TEST_CASE("two expansion rounds recover a planted three-leaf formula", "[sisso][expand][oracle]") {
    const auto curves = random_delta_curves(28, 20, 47);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    const Eigen::VectorXd target = set.design.col(3) + set.design.col(7) - set.design.col(12);

    SissoConfig config;  // defaults: 2 rounds, screen 50, k 6
    const auto pool = sisso::expand(set, target, config);
    using Terms = std::vector<std::pair<std::int32_t, std::int32_t>>;
    const Terms wanted{{3, 1}, {7, 1}, {12, -1}};
    bool present = false;
    for (const auto& entry : pool) present |= entry.expr.terms == wanted;
    CHECK(present);

    const FeatureFormula formula = sisso::so_select(pool, set, target, config.k);
    CHECK(formula.train_r2 >= 1.0 - 1e-9);
    CHECK(formula.terms.size() <= 6);
}

TEST_CASE("so_select honors the leaf bound and tie order", "[sisso][select]") {
    const auto curves = random_delta_curves(16, 6, 53);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    const Eigen::VectorXd target = set.design.col(2) + set.design.col(4);

    SissoConfig config;
    config.n_expansion = 1;
    config.screen_size = 8;
    const auto pool = sisso::expand(set, target, config);

    // single-expression pool returns that expression
    const std::vector<sisso::PoolEntry> one{pool.front()};
    const FeatureFormula only = sisso::so_select(one, set, target, 6);
    CHECK(only.terms.size() == 1);

    // leaf bound: k = 1 restricts the choice to primitives
    const FeatureFormula primitive = sisso::so_select(pool, set, target, 1);
    CHECK(primitive.terms.size() == 1);

    // every expression exceeding k -> EmptyFeasibleSet
    std::vector<sisso::PoolEntry> big;
    for (const auto& entry : pool)
        if (entry.expr.distinct_leaves() == 2) big.push_back(entry);
    REQUIRE_FALSE(big.empty());
    CHECK_THROWS_MATCHES(sisso::so_select(big, set, target, 1), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::EmptyFeasibleSet; }));
}

TEST_CASE("selected formula beats every screened primitive", "[sisso][select][property]") {
    std::mt19937_64 rng = make_rng(59);
    const auto curves = random_delta_curves(24, 10, 61);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    Eigen::VectorXd target(24);
    for (int i = 0; i < 24; ++i) target[i] = uniform_real(rng, -2, 2);

    SissoConfig config;
    config.screen_size = 20;
    const auto ranked = sisso::sis_screen(set, target, config.screen_size);
    const auto pool = sisso::expand(set, target, config);
    const FeatureFormula best = sisso::so_select(pool, set, target, config.k);
    for (const auto& r : ranked) {
        // a primitive's linear-fit R^2 equals its squared correlation
        CHECK(best.train_r2 >= r.score * r.score - 1e-12);
    }
}

TEST_CASE("formula evaluation basics", "[sisso][evaluate]") {
    Eigen::VectorXd x(4), y(4);
    x << 0, 1, 2, 3;
    y << 3, 1, 5, 5;
    const SampledCurve curve = make_curve(CurveKind::DeltaVI, x, y);

    FeatureFormula single;
    single.grid = {CurveKind::DeltaVI, x};
    single.terms = {{{0, 1}, 1}};
    CHECK(sisso::evaluate_formula(single, curve) == 2.0);  // |3 - 1|

    FeatureFormula cancel;
    cancel.grid = single.grid;
    cancel.terms = {{{0, 1}, 1}, {{0, 1}, -1}};
    CHECK(sisso::evaluate_formula(cancel, curve) == 0.0);

    SampledCurve other = curve;
    other.x[1] = 1.5;
    CHECK_THROWS_MATCHES(sisso::evaluate_formula(single, other), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::GridMismatch; }));
}

TEST_CASE("formula evaluation matches the recursive oracle", "[sisso][evaluate][oracle]") {
    std::mt19937_64 rng = make_rng(67);
    const auto curves = random_delta_curves(1, 9, 71);
    FeatureFormula formula;
    formula.grid = {CurveKind::DeltaVI, curves[0].x};
    formula.terms = {{{1, 4}, 1}, {{0, 7}, -1}, {{2, 5}, 1}};
    const double direct = sisso::evaluate_formula(formula, curves[0]);
    const double recursive = recursive_eval(formula, curves[0], formula.terms.size() - 1);
    CHECK(std::abs(direct - recursive) < 1e-12);
    (void)rng;
}

TEST_CASE("offset invariance and positive-scale equivariance", "[sisso][property]") {
    auto curves = random_delta_curves(18, 8, 73);
    const CandidateFeatureSet base = sisso::enumerate_two_point_features(curves);
    Eigen::VectorXd target(18);
    std::mt19937_64 rng = make_rng(79);
    for (int i = 0; i < 18; ++i) target[i] = uniform_real(rng, -1, 1);
    SissoConfig config;
    config.screen_size = 15;
    config.n_expansion = 1;
    const FeatureFormula before = sisso::fit_formula(base, target, config);

    // adding a constant to every y leaves all feature values unchanged
    auto shifted = curves;
    for (auto& curve : shifted) curve.y.array() += 3.7;
    const CandidateFeatureSet shifted_set = sisso::enumerate_two_point_features(shifted);
    CHECK((shifted_set.design - base.design).cwiseAbs().maxCoeff() <= 1e-12);

    // scaling y by a positive factor scales features and keeps the choice
    auto scaled = curves;
    for (auto& curve : scaled) curve.y *= 2.5;
    const CandidateFeatureSet scaled_set = sisso::enumerate_two_point_features(scaled);
    CHECK((scaled_set.design - 2.5 * base.design).cwiseAbs().maxCoeff() <= 1e-9);
    const FeatureFormula after = sisso::fit_formula(scaled_set, target, config);
    CHECK(after.str() == before.str());
}

TEST_CASE("descriptor search is deterministic", "[sisso][property]") {
    const auto curves = random_delta_curves(22, 12, 83);
    const CandidateFeatureSet set = sisso::enumerate_two_point_features(curves);
    std::mt19937_64 rng = make_rng(89);
    Eigen::VectorXd target(22);
    for (int i = 0; i < 22; ++i) target[i] = uniform_real(rng, 0, 1);
    SissoConfig config;
    const FeatureFormula a = sisso::fit_formula(set, target, config);
    const FeatureFormula b = sisso::fit_formula(set, target, config);
    CHECK(a.str() == b.str());
    CHECK(a.slope == b.slope);
    CHECK(a.intercept == b.intercept);
    CHECK(a.train_r2 == b.train_r2);
}
