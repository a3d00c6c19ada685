#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace qtcnn::testing {

// Central finite differences of a scalar function, the independent oracle
// for every analytic gradient in the suite.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step = 1e-5) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double plus = f(x);
        x[i] = orig - step;
        const double minus = f(x);
        x[i] = orig;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

// Relative comparison with an absolute floor for components near zero,
// where central differences bottom out around 1e-10.
inline bool close_rel(double a, double b, double rel = 1e-4, double floor = 1e-7) {
    const double diff = std::abs(a - b);
    return diff <= rel * std::max(std::abs(a), std::abs(b)) || diff <= floor;
}

}  // namespace qtcnn::testing
