#pragma once

#include <span>
#include <vector>

#include "fdemle/fbm.hpp"
#include "fdemle/model.hpp"

namespace fdemle {

double young_integral(const GridFunction& g, const GridFunction& f);

// Node-major path: values[k * dim + i].
struct SolutionPath {
    TimeGrid grid;
    int dim;
    std::vector<double> values;

    double at(int k, int i) const { return values[static_cast<std::size_t>(k) * dim + i]; }
    std::span<const double> state(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> terminal() const { return state(grid.steps); }
    // sup_{p<q} |Z_q - Z_p| / |τ_q - τ_p|^γ (Euclidean norm).
    double holder_seminorm(double gamma) const;
};

// Explicit Euler scheme; throws DivergenceError once any |state| > 1e12 or is non-finite.
SolutionPath euler_solve(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                         std::span<const double> initial);

// Coefficients of dZ = (ξ² Z + c) dt + Σ_j (ξ^{1,j} Z + e^j) dB^j on the nodes 0..M-1.
// drift[k*q*q + a*q + b], diffusion[(k*d + j)*q*q + a*q + b]; forcing terms optional.
struct ControlledCoeffs {
    int dim;
    int noise_dim;
    TimeGrid grid;
    std::vector<double> drift;
    std::vector<double> diffusion;
    std::vector<double> drift_forcing;      // k*q + a
    std::vector<double> diffusion_forcing;  // (k*d + j)*q + a
};

// Euler recursion for the linear equation started at node `start` from `initial`; Z = 0 before.
SolutionPath linear_solve(const ControlledCoeffs& coeffs, const FbmPath& fbm, std::span<const double> initial,
                          int start);

// Per-node one-step propagators J_k = I + ∂μ(Y_k)Δ + Σ_j ∂σ^{·j}(Y_k) δB^j_k of the Euler map.
struct StepJacobians {
    int m;
    int steps;
    std::vector<double> jac;  // k*m*m + a*m + b

    const double* at(int k) const { return jac.data() + static_cast<std::size_t>(k) * m * m; }
};

StepJacobians step_jacobians(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                             const SolutionPath& y);

}  // namespace fdemle
