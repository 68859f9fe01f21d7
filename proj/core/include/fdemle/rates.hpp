#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdemle/fbm.hpp"
#include "fdemle/model.hpp"

namespace fdemle {

enum class RateEquation { euler, derivative };

struct RateStudyOptions {
    RateEquation equation = RateEquation::euler;
    std::vector<int> steps{16, 32, 64, 128, 256, 512};
    int reference_steps = 4096;
    int paths = 100;
    double horizon = 1.0;
    double hurst = 0.75;
    std::uint64_t seed = 1;
    int workers = 0;
    // Derivative starting times as fractions of the horizon; each must land on every grid.
    std::vector<double> starts{0.0, 0.25, 0.5, 0.75};
};

struct RatePoint {
    int steps;
    double error;
};

struct RateStudy {
    std::vector<RatePoint> points;
    double slope = 0.0;
    double intercept = 0.0;
};

// Root-mean-square over paths of the sup over coarse nodes of |Z^M - Z^ref|, where the
// coarse runs use the reference fBm path coarsened onto M cells.
RateStudy rate_study(const ModelSpec& model, std::span<const double> theta, const RateStudyOptions& options);

// Least-squares line through (log x, log y); returns {slope, intercept}.
std::pair<double, double> log_log_fit(std::span<const double> x, std::span<const double> y);

}  // namespace fdemle
