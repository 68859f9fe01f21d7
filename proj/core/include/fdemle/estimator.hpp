#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdemle/likelihood.hpp"

namespace fdemle {

// a_k = a0 / (b + k + 1)^ρ for iterations k = 0, 1, ...
struct StepSchedule {
    double a0 = 1.0;
    double b = 10.0;
    double rho = 1.0;
    double step(int k) const;
};

// Empty when a0 > 0, b >= 0 and ρ in (1/2, 1]; otherwise the violated condition.
std::optional<std::string> validate_schedule(const StepSchedule& s);

struct ScoreEval {
    std::vector<double> g;
    std::vector<double> se;
};

// g(θ, attempt): attempt > 0 asks for independent Monte-Carlo paths.
using ScoreFunction = std::function<ScoreEval(std::span<const double> theta, int attempt)>;

struct IterationFailure {
    int iteration = 0;
    int attempt = 0;
    std::string kind;  // "numeric", "unreliable", "capability"
    std::string message;
    int observation = -1;
};

struct EstimationReport {
    std::vector<std::vector<double>> trace;   // iterates θ_0..θ_K
    std::vector<std::vector<double>> scores;  // g at θ_0..θ_{K-1}
    std::vector<std::vector<double>> score_se;
    std::vector<double> theta_hat;
    int tail = 0;
    std::vector<IterationFailure> failures;
    bool aborted = false;
    double seconds = 0.0;
};

struct RobbinsMonroOptions {
    int iterations = 50;
    // Each coordinate is clamped into its interval after every step.
    std::vector<std::pair<double, double>> box;
};

// θ_{k+1} = Π_Θ(θ_k - a_k g(θ_k)); θ̂ is the mean of the last ⌈K/5⌉ iterates.
EstimationReport robbins_monro(const ScoreFunction& g, std::span<const double> theta0, const StepSchedule& schedule,
                               const RobbinsMonroOptions& options);

// Drives the pseudo-likelihood score to zero: g = -∇ℓ_n.
EstimationReport estimate_parameters(const ModelSpec& model, const Observations& obs, std::span<const double> theta0,
                                     const StepSchedule& schedule, int iterations, const LikelihoodConfig& config);

struct ReplicationSummary {
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> se;
    int count = 0;
};

ReplicationSummary summarize(const std::vector<std::vector<double>>& estimates);

}  // namespace fdemle
