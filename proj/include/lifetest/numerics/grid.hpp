#pragma once

#include <Eigen/Dense>

namespace lifetest::numerics {

/// Uniform grid of n_points values, inclusive of both endpoints.
/// The implied step is (x_max - x_min) / (n_points - 1); count and range are
/// the definition, the step is derived.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_points = 2;

    Eigen::VectorXd points() const;
    double step() const { return (x_max - x_min) / (n_points - 1); }
    bool operator==(const GridSpec&) const = default;
};

}  // namespace lifetest::numerics
