#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fdemle/estimator.hpp"
#include "fdemle/likelihood.hpp"
#include "fdemle/models.hpp"
#include "fdemle/rates.hpp"

namespace fdemle::cli {

struct RunConfig {
    std::string command;
    std::string preset;

    std::string model = "fou";
    std::optional<UserModelDescription> user_model;

    std::vector<double> theta;   // parameters used to simulate data
    std::vector<double> theta0;  // Robbins-Monro start
    std::vector<std::pair<double, double>> box;

    double hurst = 0.6;
    int observations = 50;
    double spacing = 1.0;
    int steps = 500;

    int paths = 500;
    bool auto_paths = false;
    double gamma = 0.55;
    double budget_c = 1.0;
    int max_paths = 0;
    bool tail_side = true;
    LikelihoodMode mode = LikelihoodMode::transition;
    SamplerRoute route = SamplerRoute::automatic;

    StepSchedule schedule{1.0, 10.0, 1.0};
    int iterations = 50;
    int replications = 1;

    std::uint64_t seed = 1;
    int workers = 0;
    std::string input;
    std::string output = "out";
    bool emit_fbm = false;

    std::string column;
    int groups = 1;
    bool difference = false;

    RateStudyOptions rate;
};

std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);

// Keys present in `doc` override `base`. Unknown keys are rejected.
RunConfig apply_json(const nlohmann::json& doc, RunConfig base);
RunConfig load_config(const std::string& path, RunConfig base = {});

UserModelDescription parse_user_model(const nlohmann::json& doc);
nlohmann::json user_model_json(const UserModelDescription& u);

// Everything that determines the outputs; worker count and output directory are left out.
nlohmann::json to_json(const RunConfig& c);

ModelSpec resolve_model(const RunConfig& c);
LikelihoodConfig likelihood_config(const RunConfig& c, const ModelSpec& model);

// Throws ConfigError describing the first violated rule.
void validate(const RunConfig& c);

std::uint64_t fnv1a(const std::string& bytes);
std::string config_hash(const RunConfig& c);

}  // namespace fdemle::cli
