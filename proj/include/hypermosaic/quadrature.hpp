#pragma once

#include <functional>

namespace hypermosaic {

struct Quadrature {
    double abs_tol = 1e-15;
    double rel_tol = 1e-13;
    int max_depth = 40;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

// Adaptive Gauss–Kronrod (7/15) bisection. Throws QuadratureNotConverged when
// the error estimate stays above tolerance at max_depth.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, const Quadrature& q = {});

}  // namespace hypermosaic
