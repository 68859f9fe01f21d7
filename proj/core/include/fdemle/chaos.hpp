#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <vector>

#include "fdemle/dual.hpp"
#include "fdemle/fbm.hpp"
#include "fdemle/model.hpp"

namespace fdemle {

// For linear-drift additive-noise models Q is deterministic, so every weight is a
// polynomial in the Gaussian coordinates X_p = Σ_u Q^p_u δB_u = (η(Y_t - E Y_t))_p.
// Coefficients carry θ-gradients.
class ChaosPolynomial {
public:
    using Exponent = std::vector<int>;

    explicit ChaosPolynomial(int vars);
    static ChaosPolynomial constant(int vars, const Dual& c);

    int vars() const { return vars_; }
    int degree() const;
    const std::map<Exponent, Dual>& terms() const { return terms_; }
    Dual coefficient(const Exponent& e) const;

    ChaosPolynomial times_variable(int p) const;
    ChaosPolynomial derivative(int p) const;
    // this += a * other
    ChaosPolynomial& axpy(const Dual& a, const ChaosPolynomial& other);

    Dual evaluate(std::span<const Dual> x) const;
    double evaluate(std::span<const double> x) const;

private:
    int vars_;
    std::map<Exponent, Dual> terms_;
};

// U_p(K) = X_p K - Σ_{p'} G_{p'p} ∂_{p'} K with G the m×m Gram matrix (row-major).
ChaosPolynomial chaos_U(int p, const ChaosPolynomial& k, std::span<const Dual> gram);

// H_{(j1..jn)} as a polynomial; indices 1-based.
ChaosPolynomial chaos_weight(const std::vector<int>& tuple, std::span<const Dual> gram, int m);

// Deterministic quantities of a linear-additive model at one target node.
struct LinearKernel {
    TimeGrid grid{1.0, 1};
    int m = 0;
    int d = 0;
    int q = 0;
    int target = 0;
    // rows[i*n + u] = D_u Y^i_t with u = j*M + c, zero for c >= target.
    std::vector<Dual> rows;
    std::vector<Dual> gamma;  // m×m
    std::vector<Dual> eta;    // m×m
    std::vector<Dual> gram;   // ⟨Q^{p'}, Q^p⟩, computed from Q
    int cells() const { return d * grid.steps; }
};

LinearKernel linear_kernel(const ModelSpec& model, std::span<const double> theta, const TimeGrid& grid,
                           HurstParam h, int target = -1);

// Noise-free Euler value E[Y_t] with its θ-gradient.
std::vector<Dual> linear_mean(const ModelSpec& model, std::span<const double> theta, const TimeGrid& grid,
                              std::span<const double> start, int target = -1);

// Σ_{a,b} x_a r_{|a-b|} y_b over the first `cells` entries, per channel block of length M.
Dual dual_inner(std::span<const Dual> x, std::span<const Dual> y, std::span<const double> r, int d, int steps,
                int cells);

}  // namespace fdemle
