#pragma once

#include <Eigen/Dense>

namespace lifetest::numerics {

/// Natural cubic spline interpolant: C2 on [x_min, x_max], zero second
/// derivative at both ends, exact at every knot.
class CubicSpline {
public:
    /// Fits through (x, y). x must be strictly increasing with at least
    /// 3 points; raises TooFewPoints / NonMonotoneX otherwise.
    static CubicSpline fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    /// Evaluates at a point. Queries are clamped to [x_min, x_max]; callers
    /// that must not extrapolate check the domain first (see resample_curve).
    double eval(double x) const;
    Eigen::VectorXd eval(const Eigen::VectorXd& xs) const;

    double x_min() const { return x_[0]; }
    double x_max() const { return x_[x_.size() - 1]; }
    const Eigen::VectorXd& knots_x() const { return x_; }
    const Eigen::VectorXd& knots_y() const { return y_; }

private:
    CubicSpline() = default;

    Eigen::VectorXd x_;
    Eigen::VectorXd y_;
    // per-interval coefficients of y_i + b t + c t^2 + d t^3, t = x - x_i
    Eigen::VectorXd b_;
    Eigen::VectorXd c_;
    Eigen::VectorXd d_;
};

}  // namespace lifetest::numerics
