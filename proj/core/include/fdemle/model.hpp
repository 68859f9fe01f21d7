#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fdemle {

using Theta = std::vector<double>;

// Drift μ(y; θ) : R^m -> R^m.
// Layouts: jacobian[i*m+k] = ∂_k μ^i, hessian[(i*m+k)*m+l] = ∂_k ∂_l μ^i,
// theta_grad[l*m+i] = ∇_l μ^i, theta_jacobian[(l*m+i)*m+k] = ∇_l ∂_k μ^i.
class DriftFunction {
public:
    virtual ~DriftFunction() = default;
    virtual int state_dim() const = 0;
    virtual int param_dim() const = 0;
    virtual void value(const double* y, const double* theta, double* out) const = 0;
    virtual void jacobian(const double* y, const double* theta, double* out) const = 0;
    virtual void hessian(const double* y, const double* theta, double* out) const = 0;
    virtual void theta_grad(const double* y, const double* theta, double* out) const = 0;
    virtual void theta_jacobian(const double* y, const double* theta, double* out) const = 0;
};

// Diffusion σ(y; θ) : R^m -> R^{m×d}, stored channel-major.
// Layouts: value[j*m+i] = σ^{ij}, jacobian[(j*m+i)*m+k] = ∂_k σ^{ij},
// hessian[((j*m+i)*m+k)*m+l], theta_grad[(l*d+j)*m+i],
// theta_jacobian[((l*d+j)*m+i)*m+k].
class DiffusionFunction {
public:
    virtual ~DiffusionFunction() = default;
    virtual int state_dim() const = 0;
    virtual int noise_dim() const = 0;
    virtual int param_dim() const = 0;
    virtual void value(const double* y, const double* theta, double* out) const = 0;
    virtual void jacobian(const double* y, const double* theta, double* out) const = 0;
    virtual void hessian(const double* y, const double* theta, double* out) const = 0;
    virtual void theta_grad(const double* y, const double* theta, double* out) const = 0;
    virtual void theta_jacobian(const double* y, const double* theta, double* out) const = 0;
};

struct ParameterInfo {
    std::string name;
    double lower;
    double upper;
};

struct ModelSpec {
    std::string name;
    int m = 0;
    int d = 0;
    std::vector<ParameterInfo> params;
    std::vector<double> initial;
    std::shared_ptr<const DriftFunction> drift;
    std::shared_ptr<const DiffusionFunction> diffusion;
    bool linear_drift = false;
    bool additive_noise = false;

    int q() const { return static_cast<int>(params.size()); }
    bool linear_additive() const { return linear_drift && additive_noise; }
    std::vector<std::pair<double, double>> box() const;
};

// Throws ArgumentError unless θ has q entries inside the parameter box.
void check_theta(const ModelSpec& model, std::span<const double> theta);

struct FlagProbe {
    bool linear_drift;
    bool additive_noise;
    double min_ellipticity;
};

// Evaluates ∂²μ and ∂σ at pseudo-random points, and the smallest eigenvalue of σσ*.
FlagProbe probe_flags(const ModelSpec& model, std::span<const double> theta, int points = 10,
                      double radius = 3.0);

// Sets the flags from probes and checks dimension consistency. Throws ConfigError.
void finalize_model(ModelSpec& model);

// Affine coefficient families.
// μ(y; θ) = (A0 + Σ θ_l A_l) y + b0 + Σ θ_l b_l; matrices row-major m×m.
std::shared_ptr<const DriftFunction> make_affine_drift(int m, std::vector<double> a0,
                                                       std::vector<std::vector<double>> a,
                                                       std::vector<double> b0,
                                                       std::vector<std::vector<double>> b);
// σ(θ) = S0 + Σ θ_l S_l; matrices given row-major m×d.
std::shared_ptr<const DiffusionFunction> make_affine_diffusion(int m, int d, std::vector<double> s0,
                                                               std::vector<std::vector<double>> s);
// Scalar μ(y) = θ_p sin(y).
std::shared_ptr<const DriftFunction> make_sine_drift(int q, int p);
// Scalar σ(y) = θ_p (1 + κ cos y).
std::shared_ptr<const DiffusionFunction> make_cosine_diffusion(int q, int p, double kappa);

}  // namespace fdemle
