#pragma once

#include <Eigen/Dense>
#include <optional>

namespace lifetest::numerics {

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double mape_percent = 0.0;
    double r2 = 0.0;
    Eigen::Index n = 0;
};

/// MAE, RMSE, MAPE (in percent) and R^2 = 1 - SS_res/SS_tot.
/// Raises LengthMismatch on unequal/empty input, MapeUndefined when any
/// y_true is exactly zero and R2Undefined when y_true is constant.
MetricsReport compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// Evaluation-table variant: MAPE and R^2 become absent instead of raising
/// when undefined for the given truth vector.
struct LenientMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape_percent;
    std::optional<double> r2;
    Eigen::Index n = 0;
};

LenientMetrics compute_metrics_lenient(const Eigen::VectorXd& y_true,
                                       const Eigen::VectorXd& y_pred);

/// |Pearson correlation coefficient| in [0, 1].
/// Raises ConstantInput if either vector is constant, LengthMismatch on
/// unequal lengths or fewer than 2 samples.
double pearson_abs(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace lifetest::numerics
