#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "fdemle/chaos.hpp"
#include "fdemle/fbm.hpp"
#include "fdemle/model.hpp"

namespace fdemle {

// Observed states y_{t_1..t_n}; the state at t0 is the known starting point.
struct Observations {
    int m = 0;
    double t0 = 0.0;
    std::vector<double> initial;
    std::vector<double> times;
    std::vector<double> values;  // node-major n×m

    int size() const { return static_cast<int>(times.size()); }
    std::span<const double> value(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * m, static_cast<std::size_t>(m)};
    }
    std::span<const double> previous(int i) const { return i == 0 ? std::span<const double>(initial) : value(i - 1); }
    double previous_time(int i) const { return i == 0 ? t0 : times[i - 1]; }
};

// Throws ArgumentError on empty data, non-increasing times or dimension mismatch.
void validate_observations(const Observations& obs);

// transition: each observation is scored by the density of Y_{t_i} started at y_{t_{i-1}}.
// marginal: by the density of Y_{t_i} started at the initial state; requires uniform spacing.
enum class LikelihoodMode { transition, marginal };

// automatic picks the polynomial route for linear-drift additive-noise models.
enum class SamplerRoute { automatic, generic, polynomial };

struct LikelihoodConfig {
    double hurst = 0.6;
    int steps = 500;  // Euler steps per observation interval
    int paths = 500;
    int max_paths = 0;  // 0 selects 32 * paths
    double w_floor = 1e-8;
    double w_se_factor = 3.0;
    bool tail_side = true;
    LikelihoodMode mode = LikelihoodMode::transition;
    SamplerRoute route = SamplerRoute::automatic;
    std::size_t cache_bytes = std::size_t{768} << 20;
    int workers = 0;
    std::uint64_t seed = 1;
    int marginal_max_steps = 4096;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;  // NaN when a single path was used
    int paths = 0;
};

struct ObservationScore {
    double w = 0.0;
    double w_se = 0.0;
    std::vector<double> v;
    std::vector<double> v_se;
    std::vector<double> ratio;
    std::vector<double> ratio_var;  // delta-method variance of V/W
    std::vector<int> side;          // +1 right tail, -1 left tail per coordinate
    int paths = 0;
};

struct ScoreValue {
    std::vector<ObservationScore> observations;
    std::vector<double> score;
    std::vector<double> score_se;
};

// Per-path draws at one target: Y_t, ∇Y_t, H_{(1..m)} and, if requested, H_{(1..m,1..m)} with ∇.
struct SampleSet {
    int m = 0;
    int q = 0;
    int count = 0;
    bool has_v = false;
    std::vector<double> y;    // count×m
    std::vector<double> gy;   // count×q×m, [(s*q + l)*m + i]
    std::vector<double> hw;   // count
    std::vector<double> hv;   // count
    std::vector<double> ghv;  // count×q
    void append(const SampleSet& other);
};

// W and V integrands for a threshold x with chosen tail sides.
Estimate w_from_samples(const SampleSet& s, std::span<const double> x, std::span<const int> side);
ObservationScore score_from_samples(const SampleSet& s, std::span<const double> x, std::span<const int> side);
// Right tail where x_k is at or above the sample mean of Y^k, left tail otherwise.
std::vector<int> choose_sides(const SampleSet& s, std::span<const double> x, bool tail_side);

class ScoreEngine {
public:
    ScoreEngine(ModelSpec model, Observations obs, LikelihoodConfig config);
    ~ScoreEngine();
    ScoreEngine(const ScoreEngine&) = delete;
    ScoreEngine& operator=(const ScoreEngine&) = delete;

    const ModelSpec& model() const { return model_; }
    const Observations& observations() const { return obs_; }
    const LikelihoodConfig& config() const { return config_; }
    bool polynomial_route() const { return polynomial_; }

    // Σ_i V_i/W_i with the per-observation path count raised until every W_i is reliable.
    ScoreValue score(std::span<const double> theta);
    Estimate W(std::span<const double> theta, int i);
    std::vector<Estimate> V(std::span<const double> theta, int i);

    // Switches to an independent family of paths; attempt 0 restores the original streams.
    void reseed(int attempt);
    int paths(int i) const { return paths_[i]; }
    // Draws at observation i with its current path count.
    SampleSet samples(std::span<const double> theta, int i, bool need_v);

private:
    struct Problem {
        TimeGrid grid;
        int target;
        std::vector<double> start;
        std::uint64_t stream;
    };
    struct Bank;

    SampleSet sample(std::span<const double> theta, int i, int first, int count, bool need_v);
    const Bank& bank(const Problem& p, int count);
    std::vector<double> draw(const Problem& p, int path) const;
    const DaviesHarte& sampler(const TimeGrid& grid);
    const LinearKernel& kernel(std::span<const double> theta, const Problem& p);

    ModelSpec model_;
    Observations obs_;
    LikelihoodConfig config_;
    bool polynomial_ = false;
    std::uint64_t base_seed_;
    std::vector<Problem> problems_;
    std::vector<int> paths_;
    std::map<std::uint64_t, std::unique_ptr<Bank>> banks_;
    std::size_t bank_bytes_ = 0;
    std::map<std::pair<double, int>, std::unique_ptr<DaviesHarte>> samplers_;
    std::mutex sampler_mutex_;
    std::vector<double> kernel_theta_;
    std::map<std::pair<double, std::pair<int, int>>, LinearKernel> kernels_;
};

// Single-target estimators started from the model's initial state over [0, t].
Estimate estimate_density(const ModelSpec& model, std::span<const double> theta, double t,
                          std::span<const double> x, const LikelihoodConfig& config);
// One path family shared across all x (scalar models: x values; vector models: rows of m).
std::vector<Estimate> estimate_density_curve(const ModelSpec& model, std::span<const double> theta, double t,
                                             const std::vector<std::vector<double>>& xs,
                                             const LikelihoodConfig& config);
Estimate estimate_W(const ModelSpec& model, std::span<const double> theta, const Observations& obs, int i,
                    const LikelihoodConfig& config);
Estimate estimate_V(const ModelSpec& model, std::span<const double> theta, int l, const Observations& obs, int i,
                    const LikelihoodConfig& config);
ScoreValue score(const ModelSpec& model, std::span<const double> theta, const Observations& obs,
                 const LikelihoodConfig& config);

struct BudgetAllocation {
    long long paths = 0;
    double exponent = 0.0;
    bool capped = false;
    std::string warning;
};

// N = ceil(c M^{γ̃/(2γ-1) - 3}), γ̃ = T m (d + 1), capped at n_max.
BudgetAllocation allocate_budget(int steps, double gamma, double horizon, int m, int d, double c = 1.0,
                                 long long n_max = 1000000);

}  // namespace fdemle
