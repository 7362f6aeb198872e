#pragma once

#include <functional>

#include "hypermosaic/geometry.hpp"

namespace hypermosaic {

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
};

// Nelder–Mead on R^d; stops when the spread of simplex values drops below
// ftol and the simplex diameter below xtol.
MinimizeResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                           double ftol = 1e-12, double xtol = 1e-12, int max_iter = 20000);

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// Bisection for a sign change of g on [lo, hi]; throws NoRoot without one.
RootResult bisect(const std::function<double(double)>& g, double lo, double hi, double xtol = 1e-16,
                  int max_iter = 200);

}  // namespace hypermosaic
