#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "colar/errors.hpp"

namespace colar {

// Central-difference gradient check. `f` is evaluated at perturbations of
// `theta` (restored afterwards); `analytic` is the gradient under test.
// Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
inline double grad_check(const std::function<double(std::span<const double>)>& f,
                         std::span<double> theta, std::span<const double> analytic,
                         double h = 1e-5) {
    if (theta.size() != analytic.size())
        throw DimensionError("grad_check: gradient length mismatch");
    if (!std::isfinite(f(theta))) throw NumericError("grad_check: non-finite f(theta)");
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + h;
        const double fp = f(theta);
        theta[i] = orig - h;
        const double fm = f(theta);
        theta[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace colar
