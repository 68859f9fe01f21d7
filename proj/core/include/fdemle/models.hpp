#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdemle/likelihood.hpp"
#include "fdemle/model.hpp"

namespace fdemle {

// fou, linear2d, findrift and the scalar nonlinear sine1d.
std::vector<std::string> builtin_model_names();

// Throws ConfigError for unknown names.
ModelSpec get_model(const std::string& name);

// Declarative user model: coefficient tables of a registered family.
struct UserModelDescription {
    std::string name = "user";
    int m = 1;
    int d = 1;
    std::vector<ParameterInfo> params;
    std::vector<double> initial;

    std::string drift_family = "affine";  // affine | sine
    std::vector<double> drift_a0;
    std::vector<std::vector<double>> drift_a;
    std::vector<double> drift_b0;
    std::vector<std::vector<double>> drift_b;
    int sine_param = 0;

    std::string diffusion_family = "affine";  // affine | cosine
    std::vector<double> diffusion_s0;
    std::vector<std::vector<double>> diffusion_s;
    int cosine_param = 0;
    double cosine_kappa = 0.0;
};

ModelSpec build_user_model(const UserModelDescription& desc);

// Euler path of n * steps cells over [0, n * spacing], observed every `steps` cells.
Observations simulate_observations(const ModelSpec& model, std::span<const double> theta, double hurst, int n,
                                   double spacing, int steps, std::uint64_t seed,
                                   std::span<const double> initial = {});

}  // namespace fdemle
