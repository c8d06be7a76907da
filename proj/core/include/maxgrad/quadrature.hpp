#pragma once

#include <functional>

namespace maxgrad::quadrature {

struct Result {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod 7-15 on [a, b]: repeatedly bisects the
// interval with the largest error estimate until the summed estimate drops
// below abs_tol.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-9, int max_subdivisions = 5000);

// Integral over [0, inf) via the substitution x = t/(1-t), t in [0, 1).
Result integrate_half_line(const std::function<double(double)>& f, double abs_tol = 1e-9,
                           int max_subdivisions = 5000);

// Integral over (-inf, inf); evaluated as two half-line integrals.
Result integrate_real_line(const std::function<double(double)>& f, double abs_tol = 1e-9,
                           int max_subdivisions = 5000);

}  // namespace maxgrad::quadrature
