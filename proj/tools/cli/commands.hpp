#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "fdemle/estimator.hpp"
#include "fdemle/fbm.hpp"
#include "fdemle/rates.hpp"

namespace fdemle::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kUnreliableScore = 4 };

std::uint64_t data_seed(const RunConfig& c, int replication);
std::uint64_t monte_carlo_seed(const RunConfig& c, int replication);

struct SimulateRun {
    Observations obs;
    std::vector<std::string> fbm_columns;
    std::vector<std::vector<double>> fbm_values;  // per row, including t0
    std::string csv;
};
SimulateRun run_simulate(const RunConfig& c, int replication = 0);

struct EstimateRun {
    ModelSpec model;
    std::vector<EstimationReport> reports;
    ReplicationSummary summary;  // over replications that finished
    int aborted = 0;
    int paths = 0;
    int exit_code = kOk;
};
EstimateRun run_estimate(const RunConfig& c);

struct HurstGroup {
    int start;
    int length;
    double h;
};
struct HurstRun {
    int length = 0;
    HurstEstimate overall;
    std::vector<HurstGroup> groups;
};
HurstRun run_hurst(const RunConfig& c);

RateStudy run_rate_study(const RunConfig& c);

// Each command validates, runs and writes its files under c.output; returns the exit code.
int cmd_simulate(const RunConfig& c);
int cmd_estimate(const RunConfig& c);
int cmd_hurst(const RunConfig& c);
int cmd_rate_study(const RunConfig& c);

int run_cli(int argc, const char* const* argv);

}  // namespace fdemle::cli
