#pragma once

#include "lifetest/core/types.hpp"
#include "lifetest/numerics/grid.hpp"

namespace lifetest::numerics {

/// Standardizes a curve onto a uniform grid: fits a natural cubic spline on
/// the samples and evaluates it at the grid points. Kind and units are
/// preserved. The grid must lie inside the measured x-range (tolerance
/// 1e-9 * span); extrapolation raises GridOutOfDomain. Curves with strictly
/// decreasing x are reversed first.
SampledCurve resample_curve(const SampledCurve& curve, const GridSpec& grid);

}  // namespace lifetest::numerics
