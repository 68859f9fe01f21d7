#pragma once

#include "fdemle/fbm.hpp"

namespace fdemle {

// Closed forms for dY = -λ Y dt + dB, Y_0 = y0, evaluated by quadrature.
// D_s Y_t = e^{-λ(t-s)} for s <= t.
double ou_kernel(double lambda, double s, double t);

// γ_T = c_H ∫∫ e^{-λ(2T-r-u)} |r-u|^{2H-2} dr du, reduced to a smooth one-dimensional integral.
double ou_variance(double lambda, HurstParam h, double horizon);
// ∂_λ γ_T.
double ou_variance_dlambda(double lambda, HurstParam h, double horizon);

struct OuOracle {
    double y = 0.0;          // y0 e^{-λT} + ∫ e^{-λ(T-s)} dB_s
    double x = 0.0;          // Y_T - E Y_T
    double dlambda_y = 0.0;  // -T y0 e^{-λT} - ∫ (T-s) e^{-λ(T-s)} dB_s
    double gamma = 0.0;
    double dgamma = 0.0;
    double h1 = 0.0;     // x / γ
    double h11 = 0.0;    // x²/γ² - 1/γ
    double dh11 = 0.0;   // ∂_λ of the above along the path
};

// Stochastic integrals use midpoint values on the cells of the supplied path.
OuOracle ou_oracle(double lambda, const FbmPath& fbm, double y0 = 0.0);

}  // namespace fdemle
