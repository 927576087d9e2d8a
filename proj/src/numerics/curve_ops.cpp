#include "lifetest/numerics/curve_ops.hpp"

#include <string>

#include "lifetest/core/error.hpp"
#include "lifetest/numerics/spline.hpp"

namespace lifetest::numerics {

SampledCurve resample_curve(const SampledCurve& curve, const GridSpec& grid) {
    const Eigen::Index n = curve.x.size();
    if (n < 3)
        raise(Errc::TooFewPoints, "resample needs a curve with >= 3 points");

    Eigen::VectorXd x = curve.x;
    Eigen::VectorXd y = curve.y;
    if (n >= 2 && x[1] < x[0]) {
        x.reverseInPlace();
        y.reverseInPlace();
    }

    const double lo = x[0];
    const double hi = x[n - 1];
    const double eps = 1e-9 * (hi - lo);
    if (grid.x_min < lo - eps || grid.x_max > hi + eps)
        raise(Errc::GridOutOfDomain,
              "grid [" + std::to_string(grid.x_min) + ", " + std::to_string(grid.x_max) +
                  "] not contained in curve range [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]");

    const CubicSpline spline = CubicSpline::fit(x, y);
    SampledCurve out;
    out.kind = curve.kind;
    out.x_unit = curve.x_unit;
    out.y_unit = curve.y_unit;
    out.x = grid.points();
    out.y = spline.eval(out.x);
    return out;
}

}  // namespace lifetest::numerics
