#pragma once

#include <cmath>
#include <vector>

#include "speclab/types.hpp"

namespace speclab {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;  // max |log y - fit| over the points
};

// Least squares for log y = slope * log x + intercept.
inline SlopeFit slope_fit(const std::vector<double>& xs,
                          const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw validation_error("slope_fit: need >= 3 points");
    bool inc = xs[1] > xs[0], ok = true;
    for (std::size_t i = 1; i < xs.size(); ++i)
        ok = ok && (inc ? xs[i] > xs[i - 1] : xs[i] < xs[i - 1]);
    if (!ok) throw validation_error("slope_fit: xs must be strictly monotone");

    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw validation_error("slope_fit: xs and ys must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    SlopeFit f;
    f.slope = (dn * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / dn;
    for (std::size_t i = 0; i < n; ++i)
        f.max_residual = std::max(
            f.max_residual, std::abs(ly[i] - (f.slope * lx[i] + f.intercept)));
    return f;
}

}  // namespace speclab
