#include "fdemle/rates.hpp"

#include <algorithm>
#include <cmath>

#include "fdemle/errors.hpp"
#include "fdemle/parallel.hpp"
#include "fdemle/pathwise.hpp"
#include "fdemle/random.hpp"

namespace fdemle {

namespace {

ControlledCoeffs derivative_coeffs(const ModelSpec& model, std::span<const double> theta, const SolutionPath& y) {
    const int m = model.m, d = model.d, steps = y.grid.steps;
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    ControlledCoeffs c{m, d, y.grid, std::vector<double>(steps * mm), std::vector<double>(steps * d * mm), {}, {}};
    for (int k = 0; k < steps; ++k) {
        model.drift->jacobian(y.state(k).data(), theta.data(), c.drift.data() + k * mm);
        model.diffusion->jacobian(y.state(k).data(), theta.data(), c.diffusion.data() + k * d * mm);
    }
    return c;
}

std::vector<SolutionPath> derivative_paths(const ModelSpec& model, std::span<const double> theta,
                                           const FbmPath& fbm, const SolutionPath& y,
                                           const std::vector<int>& start_nodes) {
    const int m = model.m, d = model.d;
    auto coeffs = derivative_coeffs(model, theta, y);
    std::vector<double> sig(static_cast<std::size_t>(m) * d);
    std::vector<SolutionPath> out;
    for (int s : start_nodes) {
        model.diffusion->value(y.state(s).data(), theta.data(), sig.data());
        for (int j = 0; j < d; ++j)
            out.push_back(linear_solve(coeffs, fbm, std::span<const double>(sig.data() + j * m, m), s));
    }
    return out;
}

double sup_distance(const SolutionPath& coarse, const SolutionPath& fine, int factor, int from) {
    double best = 0.0;
    for (int k = from; k <= coarse.grid.steps; ++k)
        for (int i = 0; i < coarse.dim; ++i)
            best = std::max(best, std::abs(coarse.at(k, i) - fine.at(k * factor, i)));
    return best;
}

}  // namespace

std::pair<double, double> log_log_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("a slope needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("log-log fit needs positive values");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw ArgumentError("log-log fit needs distinct abscissae");
    const double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

RateStudy rate_study(const ModelSpec& model, std::span<const double> theta, const RateStudyOptions& o) {
    check_theta(model, theta);
    if (o.steps.size() < 2) throw ArgumentError("a rate study needs at least two step counts");
    if (o.paths < 1) throw ArgumentError("a rate study needs at least one path");
    for (int s : o.steps)
        if (s < 1 || s >= o.reference_steps || o.reference_steps % s != 0)
            throw ArgumentError("every step count must divide the reference step count and be smaller");
    std::vector<std::vector<int>> starts(o.steps.size() + 1);
    if (o.equation == RateEquation::derivative) {
        for (double f : o.starts) {
            if (f < 0.0 || f >= 1.0) throw ArgumentError("derivative start fractions lie in [0, 1)");
            for (std::size_t g = 0; g <= o.steps.size(); ++g) {
                const int steps = g < o.steps.size() ? o.steps[g] : o.reference_steps;
                const double node = f * steps;
                if (std::abs(node - std::round(node)) > 1e-9)
                    throw ArgumentError("derivative start time is not a node of every grid");
                starts[g].push_back(static_cast<int>(std::round(node)));
            }
        }
    }

    TimeGrid fine_grid(o.horizon, o.reference_steps);
    DaviesHarte sampler(fine_grid, HurstParam(o.hurst));
    const std::size_t g_count = o.steps.size();
    std::vector<double> sq(static_cast<std::size_t>(o.paths) * g_count, 0.0);

    parallel_for(o.paths, o.workers, [&](std::size_t p) {
        const std::uint64_t seed = stream_seed(o.seed, p);
        FbmPath fine{fine_grid, HurstParam(o.hurst), model.d, seed,
                     std::vector<double>(static_cast<std::size_t>(model.d) * o.reference_steps)};
        sampler.sample(seed, model.d, fine.increments);
        auto y_ref = euler_solve(model, theta, fine, model.initial);
        std::vector<SolutionPath> z_ref;
        if (o.equation == RateEquation::derivative) z_ref = derivative_paths(model, theta, fine, y_ref, starts[g_count]);
        for (std::size_t g = 0; g < g_count; ++g) {
            const int factor = o.reference_steps / o.steps[g];
            auto coarse = fine.coarsen(factor);
            auto y = euler_solve(model, theta, coarse, model.initial);
            double e = 0.0;
            if (o.equation == RateEquation::euler) {
                e = sup_distance(y, y_ref, factor, 0);
            } else {
                auto z = derivative_paths(model, theta, coarse, y, starts[g]);
                for (std::size_t a = 0; a < z.size(); ++a)
                    e = std::max(e, sup_distance(z[a], z_ref[a], factor, starts[g][a / model.d]));
            }
            sq[p * g_count + g] = e * e;
        }
    });

    RateStudy out;
    std::vector<double> xs, ys;
    for (std::size_t g = 0; g < g_count; ++g) {
        std::vector<double> col(o.paths);
        for (int p = 0; p < o.paths; ++p) col[p] = sq[p * g_count + g];
        const double err = std::sqrt(pairwise_sum(col) / o.paths);
        out.points.push_back({o.steps[g], err});
        xs.push_back(o.steps[g]);
        ys.push_back(err);
    }
    auto [slope, intercept] = log_log_fit(xs, ys);
    out.slope = slope;
    out.intercept = intercept;
    return out;
}

}  // namespace fdemle
