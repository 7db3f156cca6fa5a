#pragma once

#include <utility>
#include <vector>

#include "nailfem/types.hpp"

namespace nailfem {

/// Least-squares line through (log x, log y) over an index window.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<int, int> window{0, 0};  // [first, last] indices used
};

using Series = std::vector<std::pair<double, double>>;

/// Fits over the trailing fraction of the points (by index). Requires at
/// least 4 points with x, y > 0 inside the window.
RateFit fit_rate(const Series& series, double last_fraction);

/// Fits over the points with x >= max(x) / 10 (the last decade of x).
RateFit fit_rate_last_decade(const Series& series);

}  // namespace nailfem
