#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace fdemle::test {

struct Moments {
    double mean;
    double se;
};

inline Moments moments(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double v : x) m += v;
    m /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / (n - 1) / n)};
}

// Sample covariance with a plug-in standard error.
inline Moments covariance(std::span<const double> x, std::span<const double> y) {
    std::vector<double> prod(x.size());
    const auto mx = moments(x).mean, my = moments(y).mean;
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    return moments(prod);
}

inline double gaussian_density(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace fdemle::test
