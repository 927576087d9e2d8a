#include "lifetest/numerics/spline.hpp"

#include <algorithm>

#include "lifetest/core/error.hpp"
#include "lifetest/numerics/grid.hpp"

namespace lifetest::numerics {

Eigen::VectorXd GridSpec::points() const {
    if (!(x_min < x_max))
        raise(Errc::ConfigError, "grid requires x_min < x_max");
    if (n_points < 2)
        raise(Errc::ConfigError, "grid requires n_points >= 2");
    Eigen::VectorXd p(n_points);
    const double span = x_max - x_min;
    for (int i = 0; i < n_points; ++i)
        p[i] = x_min + span * static_cast<double>(i) / (n_points - 1);
    p[n_points - 1] = x_max;  // endpoint exact regardless of rounding
    return p;
}

CubicSpline CubicSpline::fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.size();
    if (y.size() != n)
        raise(Errc::LengthMismatch, "spline x/y lengths differ");
    if (n < 3)
        raise(Errc::TooFewPoints, "spline needs at least 3 points");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1]))
            raise(Errc::NonMonotoneX, "spline x must be strictly increasing");

    // Solve the tridiagonal system for the second derivatives m_i with
    // natural boundary conditions m_0 = m_{n-1} = 0 (Thomas algorithm).
    Eigen::VectorXd h(n - 1);
    for (Eigen::Index i = 0; i < n - 1; ++i) h[i] = x[i + 1] - x[i];

    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    if (n > 2) {
        const Eigen::Index k = n - 2;  // interior unknowns
        Eigen::VectorXd diag(k), rhs(k), upper(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            upper[i] = h[i + 1];
            rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
        }
        for (Eigen::Index i = 1; i < k; ++i) {
            const double w = h[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for (Eigen::Index i = k - 1; i >= 1; --i)
            m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
    }

    CubicSpline s;
    s.x_ = x;
    s.y_ = y;
    s.b_.resize(n - 1);
    s.c_.resize(n - 1);
    s.d_.resize(n - 1);
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        s.b_[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
        s.c_[i] = m[i] / 2.0;
        s.d_[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
    }
    return s;
}

double CubicSpline::eval(double xq) const {
    const Eigen::Index n = x_.size();
    // exact-knot short circuit keeps knot values and repeated resampling
    // bit-exact
    const double* begin = x_.data();
    const double* end = begin + n;
    const double* it = std::lower_bound(begin, end, xq);
    if (it != end && *it == xq) return y_[it - begin];

    Eigen::Index i;
    if (xq <= x_[0]) {
        i = 0;
        xq = x_[0];
    } else if (xq >= x_[n - 1]) {
        i = n - 2;
        xq = x_[n - 1];
    } else {
        i = (it - begin) - 1;
    }
    const double t = xq - x_[i];
    return y_[i] + t * (b_[i] + t * (c_[i] + t * d_[i]));
}

Eigen::VectorXd CubicSpline::eval(const Eigen::VectorXd& xs) const {
    Eigen::VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = eval(xs[i]);
    return out;
}

}  // namespace lifetest::numerics
