#include "lifetest/numerics/metrics.hpp"

#include <cmath>

#include "lifetest/core/error.hpp"

namespace lifetest::numerics {

namespace {

void check_lengths(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() == 0 || y_true.size() != y_pred.size())
        raise(Errc::LengthMismatch, "metrics need equal, nonzero-length vectors");
}

}  // namespace

MetricsReport compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    check_lengths(y_true, y_pred);
    const Eigen::Index n = y_true.size();
    const Eigen::ArrayXd err = (y_true - y_pred).array();

    MetricsReport r;
    r.n = n;
    r.mae = err.abs().mean();
    r.rmse = std::sqrt(err.square().mean());

    if ((y_true.array() == 0.0).any())
        raise(Errc::MapeUndefined, "MAPE undefined: some y_true is zero");
    r.mape_percent = 100.0 * (err / y_true.array()).abs().mean();

    const double ss_tot = (y_true.array() - y_true.mean()).square().sum();
    if (ss_tot == 0.0)
        raise(Errc::R2Undefined, "R^2 undefined: y_true is constant");
    r.r2 = 1.0 - err.square().sum() / ss_tot;
    return r;
}

LenientMetrics compute_metrics_lenient(const Eigen::VectorXd& y_true,
                                       const Eigen::VectorXd& y_pred) {
    check_lengths(y_true, y_pred);
    const Eigen::ArrayXd err = (y_true - y_pred).array();

    LenientMetrics r;
    r.n = y_true.size();
    r.mae = err.abs().mean();
    r.rmse = std::sqrt(err.square().mean());
    if (!(y_true.array() == 0.0).any())
        r.mape_percent = 100.0 * (err / y_true.array()).abs().mean();
    const double ss_tot = (y_true.array() - y_true.mean()).square().sum();
    if (ss_tot != 0.0)
        r.r2 = 1.0 - err.square().sum() / ss_tot;
    return r;
}

double pearson_abs(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() < 2)
        raise(Errc::LengthMismatch, "correlation needs equal lengths >= 2");
    const Eigen::ArrayXd dx = x.array() - x.mean();
    const Eigen::ArrayXd dy = y.array() - y.mean();
    const double sx = dx.square().sum();
    const double sy = dy.square().sum();
    if (sx == 0.0 || sy == 0.0)
        raise(Errc::ConstantInput, "correlation undefined for constant input");
    const double r = (dx * dy).sum() / std::sqrt(sx * sy);
    return std::min(std::abs(r), 1.0);
}

}  // namespace lifetest::numerics
