#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fdemle {

struct HurstParam {
    double h;
    explicit HurstParam(double value);
    double c_h() const { return h * (2.0 * h - 1.0); }
};

struct TimeGrid {
    double horizon;
    int steps;
    TimeGrid(double horizon, int steps);
    double dt() const { return horizon / steps; }
    double node(int k) const { return horizon * k / steps; }
    bool operator==(const TimeGrid& other) const = default;
};

// Sample path of a d-dimensional fBm. Increments are stored channel-major:
// increments[j * M + c] = B^j(τ_{c+1}) - B^j(τ_c).
struct FbmPath {
    TimeGrid grid;
    HurstParam hurst;
    int dim;
    std::uint64_t seed;
    std::vector<double> increments;

    double increment(int j, int c) const { return increments[static_cast<std::size_t>(j) * grid.steps + c]; }
    std::span<const double> channel(int j) const {
        return {increments.data() + static_cast<std::size_t>(j) * grid.steps,
                static_cast<std::size_t>(grid.steps)};
    }
    // B^j at node k.
    double value(int j, int k) const;
    std::vector<double> values(int j) const;
    // Same path observed on a grid with M / factor steps.
    FbmPath coarsen(int factor) const;
};

double fbm_covariance(double s, double t, HurstParam h);

// r_k = Cov(δB_a, δB_{a+k}) for cells of width Δ, k = 0..M-1.
std::vector<double> increment_autocovariance(const TimeGrid& grid, HurstParam h);

// Circulant-embedding sampler for a fixed (grid, h). Thread safe after construction.
class DaviesHarte {
public:
    DaviesHarte(const TimeGrid& grid, HurstParam h);
    ~DaviesHarte();
    DaviesHarte(const DaviesHarte&) = delete;
    DaviesHarte& operator=(const DaviesHarte&) = delete;

    const TimeGrid& grid() const { return grid_; }
    HurstParam hurst() const { return hurst_; }
    // Writes dim channels of increments (channel-major) drawn from seed.
    void sample(std::uint64_t seed, int dim, std::span<double> out) const;

private:
    TimeGrid grid_;
    HurstParam hurst_;
    std::vector<double> sqrt_eigen_;
    void* plan_;
};

FbmPath simulate_fbm(const TimeGrid& grid, int dim, HurstParam h, std::uint64_t seed);

// Function sampled at the grid nodes. Integrals against increments use the
// left node value on each cell.
struct GridFunction {
    TimeGrid grid;
    std::vector<double> values;
};

GridFunction indicator(const TimeGrid& grid, double a, double b);
GridFunction sample_function(const TimeGrid& grid, double (*f)(double));

double weighted_inner(const GridFunction& phi, const GridFunction& psi, HurstParam h);

// Σ_{a,b} φ_a ψ_b r_{|a-b|} for cell values.
double weighted_inner_cells(std::span<const double> phi, std::span<const double> psi,
                            std::span<const double> r);

// out_a = Σ_b r_{|a-b|} x_b over the first x.size() cells.
void toeplitz_apply(std::span<const double> r, std::span<const double> x, std::span<double> out);

struct HurstEstimate {
    double h;
    std::vector<int> windows;
    std::vector<double> log_rs;
    std::vector<double> log_expected_rs;
};

struct RsOptions {
    int min_window = 16;
    int max_divisor = 4;
};

HurstEstimate estimate_hurst_rs(std::span<const double> series, const RsOptions& options = {});

// Anis-Lloyd expected R/S of n iid Gaussian values.
double expected_rs(int n);

}  // namespace fdemle
