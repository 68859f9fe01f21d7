#include <cmath>
#include <numeric>

#include "fdemle/errors.hpp"
#include "fdemle/fbm.hpp"

namespace fdemle {

namespace {

std::vector<int> dyadic_windows(int length, int lo, int hi) {
    std::vector<int> w;
    for (int n = lo; n <= hi; n *= 2) w.push_back(n);
    return w;
}

// Mean R/S over non-overlapping blocks of size n; NaN if every block is flat.
double mean_rescaled_range(std::span<const double> x, int n) {
    const int blocks = static_cast<int>(x.size()) / n;
    double total = 0.0;
    int used = 0;
    for (int b = 0; b < blocks; ++b) {
        auto blk = x.subspan(static_cast<std::size_t>(b) * n, n);
        double mean = std::accumulate(blk.begin(), blk.end(), 0.0) / n;
        double z = 0.0, zmax = 0.0, zmin = 0.0, ss = 0.0;
        for (double v : blk) {
            z += v - mean;
            zmax = std::max(zmax, z);
            zmin = std::min(zmin, z);
            ss += (v - mean) * (v - mean);
        }
        double sd = std::sqrt(ss / n);
        double range = zmax - zmin;
        if (sd <= 0.0 || range <= 0.0) continue;
        total += range / sd;
        ++used;
    }
    return used == 0 ? std::nan("") : total / used;
}

}  // namespace

HurstEstimate estimate_hurst_rs(std::span<const double> series, const RsOptions& options) {
    const int len = static_cast<int>(series.size());
    if (len < 32) throw ArgumentError("R/S estimation needs at least 32 values");
    for (double v : series)
        if (!std::isfinite(v)) throw ArgumentError("R/S input contains non-finite values");

    auto windows = dyadic_windows(len, options.min_window, len / options.max_divisor);
    if (windows.size() < 2) windows = dyadic_windows(len, 4, len / 2);

    HurstEstimate est{0.0, {}, {}, {}};
    for (int n : windows) {
        double rs = mean_rescaled_range(series, n);
        if (!std::isfinite(rs)) continue;
        est.windows.push_back(n);
        est.log_rs.push_back(std::log(rs));
        est.log_expected_rs.push_back(std::log(expected_rs(n)));
    }
    if (est.windows.size() < 2) throw ArgumentError("R/S input is degenerate (zero range or deviation)");

    const std::size_t k = est.windows.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> xs(k), ys(k);
    for (std::size_t i = 0; i < k; ++i) {
        xs[i] = std::log(static_cast<double>(est.windows[i]));
        ys[i] = est.log_rs[i] - est.log_expected_rs[i];
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    est.h = 0.5 + sxy / sxx;
    return est;
}

}  // namespace fdemle
