#include "lifetest/sisso/sisso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "lifetest/core/error.hpp"

namespace lifetest::sisso {

std::int32_t pair_to_column(std::int32_t n, std::int32_t i, std::int32_t j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

TwoPointFeature column_to_pair(std::int32_t n, std::int32_t column) {
    std::int32_t i = 0;
    std::int32_t remaining = column;
    while (remaining >= n - 1 - i) {
        remaining -= n - 1 - i;
        ++i;
    }
    return {i, i + 1 + remaining};
}

bool GridIdentity::matches(const SampledCurve& curve) const {
    if (curve.kind != kind || curve.x.size() != x.size()) return false;
    for (Eigen::Index p = 0; p < x.size(); ++p)
        if (curve.x[p] != x[p]) return false;
    return true;
}

CandidateFeatureSet enumerate_two_point_features(const std::vector<SampledCurve>& curves) {
    if (curves.empty())
        raise(Errc::EmptyInput, "no curves to enumerate");
    CandidateFeatureSet set;
    set.grid.kind = curves.front().kind;
    set.grid.x = curves.front().x;
    for (const SampledCurve& curve : curves)
        if (!set.grid.matches(curve))
            raise(Errc::GridMismatch, "curves do not share one grid");

    const auto n = static_cast<std::int32_t>(set.grid.x.size());
    const std::int64_t cols = two_point_count(n);
    set.features.reserve(static_cast<std::size_t>(cols));
    for (std::int32_t i = 0; i < n; ++i)
        for (std::int32_t j = i + 1; j < n; ++j) set.features.push_back({i, j});

    set.design.resize(static_cast<Eigen::Index>(curves.size()), cols);
    for (std::size_t r = 0; r < curves.size(); ++r) {
        const Eigen::VectorXd& y = curves[r].y;
        Eigen::Index c = 0;
        for (std::int32_t i = 0; i < n; ++i)
            for (std::int32_t j = i + 1; j < n; ++j)
                set.design(static_cast<Eigen::Index>(r), c++) = std::abs(y[i] - y[j]);
    }
    return set;
}

namespace {

struct CenteredTarget {
    Eigen::VectorXd centered;
    double norm = 0.0;  // sqrt(sum of squared deviations)
};

CenteredTarget center_target(const Eigen::VectorXd& target) {
    CenteredTarget t;
    t.centered = target.array() - target.mean();
    t.norm = t.centered.norm();
    if (t.norm == 0.0)
        raise(Errc::ConstantTarget, "screening target is constant");
    return t;
}

/// |corr(v, target)|; -1 marks a constant v.
double abs_corr(const Eigen::VectorXd& v, const CenteredTarget& t) {
    const Eigen::VectorXd dv = v.array() - v.mean();
    const double nv = dv.norm();
    if (nv == 0.0) return -1.0;
    return std::min(std::abs(dv.dot(t.centered) / (nv * t.norm)), 1.0);
}

std::string expr_key(const FeatureExpr& expr) {
    std::ostringstream key;
    for (const auto& [column, coeff] : expr.terms) key << column << ':' << coeff << ';';
    return key.str();
}

/// Merges two canonical term lists; cancelled columns disappear.
FeatureExpr combine(const FeatureExpr& a, const FeatureExpr& b, int sign_b) {
    FeatureExpr out;
    out.terms.reserve(a.terms.size() + b.terms.size());
    std::size_t ia = 0, ib = 0;
    while (ia < a.terms.size() || ib < b.terms.size()) {
        if (ib == b.terms.size() ||
            (ia < a.terms.size() && a.terms[ia].first < b.terms[ib].first)) {
            out.terms.push_back(a.terms[ia++]);
        } else if (ia == a.terms.size() || b.terms[ib].first < a.terms[ia].first) {
            out.terms.emplace_back(b.terms[ib].first, sign_b * b.terms[ib].second);
            ++ib;
        } else {
            const std::int32_t coeff = a.terms[ia].second + sign_b * b.terms[ib].second;
            if (coeff != 0) out.terms.emplace_back(a.terms[ia].first, coeff);
            ++ia;
            ++ib;
        }
    }
    return out;
}

}  // namespace

std::vector<ScreenRank> sis_screen(const CandidateFeatureSet& candidates,
                                   const Eigen::VectorXd& target, int screen_size) {
    if (candidates.design.rows() != target.size())
        raise(Errc::LengthMismatch, "design rows != target length");
    if (screen_size < 1)
        raise(Errc::ConfigError, "screen_size must be >= 1");
    const CenteredTarget t = center_target(target);

    std::vector<ScreenRank> ranked;
    ranked.reserve(static_cast<std::size_t>(candidates.design.cols()));
    for (Eigen::Index c = 0; c < candidates.design.cols(); ++c) {
        const double score = abs_corr(candidates.design.col(c), t);
        if (score < 0.0) continue;  // constant column
        ranked.push_back({static_cast<std::int32_t>(c), score});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScreenRank& a, const ScreenRank& b) { return a.score > b.score; });
    if (ranked.size() > static_cast<std::size_t>(screen_size))
        ranked.resize(static_cast<std::size_t>(screen_size));
    return ranked;
}

std::vector<PoolEntry> expand(const CandidateFeatureSet& candidates,
                              const Eigen::VectorXd& target, const SissoConfig& cfg) {
    const CenteredTarget t = center_target(target);
    const std::vector<ScreenRank> screened = sis_screen(candidates, target, cfg.screen_size);
    if (screened.empty())
        raise(Errc::EmptyInput, "no usable candidate columns");

    std::vector<PoolEntry> pool;
    std::unordered_set<std::string> seen;
    for (const ScreenRank& rank : screened) {
        PoolEntry entry;
        entry.expr.terms = {{rank.column, 1}};
        entry.values = candidates.design.col(rank.column);
        entry.score = rank.score;
        seen.insert(expr_key(entry.expr));
        pool.push_back(std::move(entry));
    }

    for (int round = 0; round < cfg.n_expansion; ++round) {
        std::vector<PoolEntry> fresh;
        auto consider = [&](const PoolEntry& a, const PoolEntry& b, int sign_b) {
            FeatureExpr expr = combine(a.expr, b.expr, sign_b);
            if (expr.terms.empty()) return;  // full cancellation
            std::string key = expr_key(expr);
            if (!seen.insert(std::move(key)).second) return;
            PoolEntry entry;
            entry.values = sign_b > 0 ? (a.values + b.values).eval()
                                      : (a.values - b.values).eval();
            entry.score = abs_corr(entry.values, t);
            if (entry.score < 0.0) return;  // constant
            entry.expr = std::move(expr);
            fresh.push_back(std::move(entry));
        };
        const std::size_t size = pool.size();
        for (std::size_t ia = 0; ia < size; ++ia) {
            for (std::size_t ib = ia + 1; ib < size; ++ib) {
                if (cfg.op_plus) consider(pool[ia], pool[ib], +1);
                if (cfg.op_minus) {
                    consider(pool[ia], pool[ib], -1);
                    consider(pool[ib], pool[ia], -1);  // both orders are distinct expressions
                }
            }
        }
        std::stable_sort(fresh.begin(), fresh.end(),
                         [](const PoolEntry& a, const PoolEntry& b) { return a.score > b.score; });
        if (fresh.size() > static_cast<std::size_t>(cfg.screen_size))
            fresh.resize(static_cast<std::size_t>(cfg.screen_size));
        for (PoolEntry& entry : fresh) pool.push_back(std::move(entry));
        if (fresh.empty()) break;
    }
    return pool;
}

FeatureFormula so_select(const std::vector<PoolEntry>& pool,
                         const CandidateFeatureSet& candidates,
                         const Eigen::VectorXd& target, int k) {
    if (pool.empty())
        raise(Errc::EmptyInput, "descriptor pool is empty");
    if (k < 1)
        raise(Errc::ConfigError, "k must be >= 1");
    const double mean_t = target.mean();
    const double ss_tot = (target.array() - mean_t).square().sum();
    if (ss_tot == 0.0)
        raise(Errc::ConstantTarget, "selection target is constant");

    const PoolEntry* best = nullptr;
    double best_r2 = -std::numeric_limits<double>::infinity();
    double best_slope = 0.0, best_intercept = 0.0;
    for (const PoolEntry& entry : pool) {
        if (entry.expr.distinct_leaves() > k) continue;
        const double mean_v = entry.values.mean();
        const Eigen::ArrayXd dv = entry.values.array() - mean_v;
        const double var_v = dv.square().sum();
        if (var_v == 0.0) continue;
        const double slope = (dv * (target.array() - mean_t)).sum() / var_v;
        const double intercept = mean_t - slope * mean_v;
        const double ss_res =
            (target.array() - (slope * entry.values.array() + intercept)).square().sum();
        const double r2 = 1.0 - ss_res / ss_tot;
        if (r2 > best_r2) {
            best_r2 = r2;
            best = &entry;
            best_slope = slope;
            best_intercept = intercept;
        }
    }
    if (!best)
        raise(Errc::EmptyFeasibleSet, "no pool expression has <= k distinct leaves");

    FeatureFormula formula;
    formula.grid = candidates.grid;
    const auto n = static_cast<std::int32_t>(candidates.grid.x.size());
    for (const auto& [column, coeff] : best->expr.terms)
        formula.terms.push_back({column_to_pair(n, column), coeff});
    formula.slope = best_slope;
    formula.intercept = best_intercept;
    formula.train_r2 = best_r2;
    return formula;
}

FeatureFormula fit_formula(const CandidateFeatureSet& candidates,
                           const Eigen::VectorXd& target, const SissoConfig& cfg) {
    const std::vector<PoolEntry> pool = expand(candidates, target, cfg);
    return so_select(pool, candidates, target, cfg.k);
}

std::string FeatureFormula::str() const {
    std::ostringstream out;
    bool first = true;
    for (const FormulaTerm& term : terms) {
        const std::int32_t c = term.coeff;
        if (first) {
            if (c < 0) out << "-";
            first = false;
        } else {
            out << (c < 0 ? " - " : " + ");
        }
        const std::int32_t mag = std::abs(c);
        if (mag != 1) out << mag << "*";
        out << "|y[" << term.feature.i << "]-y[" << term.feature.j << "]|";
    }
    if (first) out << "0";
    return out.str();
}

double evaluate_formula(const FeatureFormula& formula, const SampledCurve& curve) {
    if (!formula.grid.matches(curve))
        raise(Errc::GridMismatch, "curve grid does not match the formula's grid");
    double value = 0.0;
    for (const FormulaTerm& term : formula.terms)
        value += term.coeff * std::abs(curve.y[term.feature.i] - curve.y[term.feature.j]);
    return value;
}

}  // namespace lifetest::sisso
