#include "fdemle/ou_oracle.hpp"

#include <array>
#include <cmath>
#include <functional>

#include "fdemle/errors.hpp"

namespace fdemle {

namespace {

constexpr int kPanels = 4000;

// 8-point Gauss-Legendre on [a, b].
double gauss8(const std::function<double(double)>& f, double a, double b) {
    static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                0.9602898564975363};
    static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                0.1012285362903763};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
    return s * h;
}

// ½ ∫_w^{2T-w} e^{-λz} dz
double lag_weight(double lambda, double horizon, double w) {
    if (lambda == 0.0) return horizon - w;
    return std::exp(-lambda * w) * -std::expm1(-2.0 * lambda * (horizon - w)) / (2.0 * lambda);
}

// -½ ∫_w^{2T-w} z e^{-λz} dz
double lag_weight_dlambda(double lambda, double horizon, double w) {
    const double top = 2.0 * horizon - w;
    if (lambda * (top - w) < 0.1) return -0.5 * gauss8([&](double z) { return z * std::exp(-lambda * z); }, w, top);
    auto prim = [&](double z) { return -std::exp(-lambda * z) * (z / lambda + 1.0 / (lambda * lambda)); };
    return -0.5 * (prim(top) - prim(w));
}

// 2H ∫_0^{T^{2H-1}} f(v^{1/(2H-1)}) dv by composite Simpson.
double lag_integral(HurstParam h, double horizon, const std::function<double(double)>& f) {
    const double e = 2.0 * h.h - 1.0;
    const double top = std::pow(horizon, e);
    const double dv = top / kPanels;
    double s = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
        double v = i * dv;
        double c = (i == 0 || i == kPanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += c * f(std::pow(v, 1.0 / e));
    }
    return 2.0 * h.h * s * dv / 3.0;
}

}  // namespace

double ou_kernel(double lambda, double s, double t) { return s <= t ? std::exp(-lambda * (t - s)) : 0.0; }

double ou_variance(double lambda, HurstParam h, double horizon) {
    if (!(horizon > 0.0) || lambda < 0.0) throw ArgumentError("ou_variance needs T > 0 and λ >= 0");
    return lag_integral(h, horizon, [&](double w) { return lag_weight(lambda, horizon, w); });
}

double ou_variance_dlambda(double lambda, HurstParam h, double horizon) {
    if (!(horizon > 0.0) || lambda < 0.0) throw ArgumentError("ou_variance_dlambda needs T > 0 and λ >= 0");
    return lag_integral(h, horizon, [&](double w) { return lag_weight_dlambda(lambda, horizon, w); });
}

OuOracle ou_oracle(double lambda, const FbmPath& fbm, double y0) {
    if (fbm.dim != 1) throw ArgumentError("the OU oracle is scalar");
    const double T = fbm.grid.horizon;
    OuOracle o;
    double x = 0.0, dx = 0.0;
    for (int c = 0; c < fbm.grid.steps; ++c) {
        const double lag = T - 0.5 * (fbm.grid.node(c) + fbm.grid.node(c + 1));
        const double k = std::exp(-lambda * lag);
        x += k * fbm.increment(0, c);
        dx -= lag * k * fbm.increment(0, c);
    }
    const double decay = std::exp(-lambda * T);
    o.x = x;
    o.y = y0 * decay + x;
    o.dlambda_y = -T * y0 * decay + dx;
    o.gamma = ou_variance(lambda, fbm.hurst, T);
    o.dgamma = ou_variance_dlambda(lambda, fbm.hurst, T);
    const double g = o.gamma;
    o.h1 = x / g;
    o.h11 = x * x / (g * g) - 1.0 / g;
    o.dh11 = 2.0 * x * dx / (g * g) - 2.0 * x * x * o.dgamma / (g * g * g) + o.dgamma / (g * g);
    return o;
}

}  // namespace fdemle
