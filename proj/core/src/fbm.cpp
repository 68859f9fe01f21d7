#include "fdemle/fbm.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include "fdemle/errors.hpp"
#include "fdemle/random.hpp"

namespace fdemle {

namespace {

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

double unit_fgn_autocov(int k, double h) {
    double kk = std::abs(static_cast<double>(k));
    return 0.5 * (std::pow(kk + 1.0, 2.0 * h) - 2.0 * std::pow(kk, 2.0 * h) +
                  std::pow(std::abs(kk - 1.0), 2.0 * h));
}

}  // namespace

HurstParam::HurstParam(double value) : h(value) {
    if (!(value > 0.5 && value < 1.0)) {
        std::ostringstream os;
        os << "Hurst parameter must lie in (1/2, 1), got " << value;
        throw ArgumentError(os.str());
    }
}

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ArgumentError("grid horizon must be positive");
    if (steps_ < 1) throw ArgumentError("grid needs at least one step");
}

double FbmPath::value(int j, int k) const {
    double s = 0.0;
    auto ch = channel(j);
    for (int c = 0; c < k; ++c) s += ch[c];
    return s;
}

std::vector<double> FbmPath::values(int j) const {
    std::vector<double> out(grid.steps + 1, 0.0);
    auto ch = channel(j);
    for (int c = 0; c < grid.steps; ++c) out[c + 1] = out[c] + ch[c];
    return out;
}

FbmPath FbmPath::coarsen(int factor) const {
    if (factor < 1 || grid.steps % factor != 0) throw ArgumentError("coarsening factor must divide the step count");
    TimeGrid coarse(grid.horizon, grid.steps / factor);
    FbmPath out{coarse, hurst, dim, seed, std::vector<double>(static_cast<std::size_t>(dim) * coarse.steps, 0.0)};
    for (int j = 0; j < dim; ++j) {
        auto ch = channel(j);
        for (int c = 0; c < coarse.steps; ++c) {
            double s = 0.0;
            for (int f = 0; f < factor; ++f) s += ch[c * factor + f];
            out.increments[static_cast<std::size_t>(j) * coarse.steps + c] = s;
        }
    }
    return out;
}

double fbm_covariance(double s, double t, HurstParam h) {
    if (s < 0.0 || t < 0.0) throw ArgumentError("fbm_covariance requires non-negative times");
    double e = 2.0 * h.h;
    return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

std::vector<double> increment_autocovariance(const TimeGrid& grid, HurstParam h) {
    std::vector<double> r(grid.steps);
    double scale = std::pow(grid.dt(), 2.0 * h.h);
    for (int k = 0; k < grid.steps; ++k) r[k] = scale * unit_fgn_autocov(k, h.h);
    return r;
}

DaviesHarte::DaviesHarte(const TimeGrid& grid, HurstParam h) : grid_(grid), hurst_(h), plan_(nullptr) {
    if (grid.steps < 2) throw ArgumentError("fBm simulation needs at least two steps");
    const int m = grid.steps;
    const int n = 2 * m;
    std::vector<std::complex<double>> in(n), out(n);
    for (int k = 0; k <= m; ++k) in[k] = unit_fgn_autocov(k, h.h);
    for (int k = 1; k < m; ++k) in[n - k] = unit_fgn_autocov(k, h.h);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                 reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    double max_eig = 0.0, min_eig = 0.0;
    for (const auto& z : out) {
        max_eig = std::max(max_eig, z.real());
        min_eig = std::min(min_eig, z.real());
    }
    if (min_eig < -1e-10 * max_eig) {
        std::ostringstream os;
        os << "circulant embedding has negative eigenvalue " << min_eig;
        throw EmbeddingError(os.str());
    }
    sqrt_eigen_.resize(n);
    for (int k = 0; k < n; ++k) sqrt_eigen_[k] = std::sqrt(std::max(out[k].real(), 0.0) / n);
}

DaviesHarte::~DaviesHarte() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void DaviesHarte::sample(std::uint64_t seed, int dim, std::span<double> out) const {
    const int m = grid_.steps;
    const int n = 2 * m;
    if (dim < 1) throw ArgumentError("fBm dimension must be positive");
    if (out.size() != static_cast<std::size_t>(dim) * m) throw ArgumentError("output span has wrong size");
    const double scale = std::pow(grid_.dt(), hurst_.h);
    NormalStream rng(seed);
    std::vector<std::complex<double>> in(n), res(n);
    for (int pair = 0; 2 * pair < dim; ++pair) {
        for (int k = 0; k < n; ++k) {
            double a = rng.next();
            double b = rng.next();
            in[k] = std::complex<double>(a, b) * sqrt_eigen_[k];
        }
        fftw_execute_dft(static_cast<fftw_plan>(plan_), reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(res.data()));
        const int j0 = 2 * pair;
        for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(j0) * m + c] = scale * res[c].real();
        if (j0 + 1 < dim)
            for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(j0 + 1) * m + c] = scale * res[c].imag();
    }
}

FbmPath simulate_fbm(const TimeGrid& grid, int dim, HurstParam h, std::uint64_t seed) {
    if (grid.steps < 2) throw ArgumentError("fBm simulation needs at least two steps");
    DaviesHarte sampler(grid, h);
    FbmPath path{grid, h, dim, seed, std::vector<double>(static_cast<std::size_t>(dim) * grid.steps)};
    sampler.sample(seed, dim, path.increments);
    return path;
}

GridFunction indicator(const TimeGrid& grid, double a, double b) {
    GridFunction f{grid, std::vector<double>(grid.steps + 1, 0.0)};
    const double tol = 1e-12 * grid.horizon;
    for (int k = 0; k <= grid.steps; ++k) {
        double t = grid.node(k);
        if (t >= a - tol && t < b - tol) f.values[k] = 1.0;
    }
    return f;
}

GridFunction sample_function(const TimeGrid& grid, double (*f)(double)) {
    GridFunction g{grid, std::vector<double>(grid.steps + 1)};
    for (int k = 0; k <= grid.steps; ++k) g.values[k] = f(grid.node(k));
    return g;
}

void toeplitz_apply(std::span<const double> r, std::span<const double> x, std::span<double> out) {
    const std::size_t n = x.size();
    if (r.size() < n || out.size() < n) throw ArgumentError("toeplitz_apply size mismatch");
    for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < a; ++b) s += r[a - b] * x[b];
        for (std::size_t b = a; b < n; ++b) s += r[b - a] * x[b];
        out[a] = s;
    }
}

double weighted_inner_cells(std::span<const double> phi, std::span<const double> psi,
                            std::span<const double> r) {
    if (phi.size() != psi.size()) throw ArgumentError("weighted_inner_cells size mismatch");
    std::vector<double> tmp(psi.size());
    toeplitz_apply(r, psi, tmp);
    double s = 0.0;
    for (std::size_t a = 0; a < phi.size(); ++a) s += phi[a] * tmp[a];
    return s;
}

double weighted_inner(const GridFunction& phi, const GridFunction& psi, HurstParam h) {
    if (!(phi.grid == psi.grid)) throw ArgumentError("weighted_inner requires a common grid");
    const int m = phi.grid.steps;
    if (phi.values.size() != static_cast<std::size_t>(m + 1) || psi.values.size() != static_cast<std::size_t>(m + 1))
        throw ArgumentError("grid function has wrong length");
    auto r = increment_autocovariance(phi.grid, h);
    return weighted_inner_cells(std::span<const double>(phi.values).first(m),
                                std::span<const double>(psi.values).first(m), r);
}

double expected_rs(int n) {
    if (n < 2) throw ArgumentError("expected_rs needs n >= 2");
    double s = 0.0;
    for (int i = 1; i < n; ++i) s += std::sqrt(static_cast<double>(n - i) / i);
    double front;
    if (n <= 340)
        front = std::exp(std::lgamma((n - 1) / 2.0) - std::lgamma(n / 2.0)) / std::sqrt(M_PI);
    else
        front = 1.0 / std::sqrt(n * M_PI / 2.0);
    return (n - 0.5) / n * front * s;
}

}  // namespace fdemle
