#include "fdemle/pathwise.hpp"

#include <cmath>

#include "fdemle/errors.hpp"

namespace fdemle {

namespace {

constexpr double kDivergenceBound = 1e12;

void guard(std::span<const double> state, int step, const char* what) {
    for (double v : state)
        if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) throw DivergenceError(what, step);
}

}  // namespace

double young_integral(const GridFunction& g, const GridFunction& f) {
    if (!(g.grid == f.grid)) throw ArgumentError("young_integral requires a common grid");
    const int m = g.grid.steps;
    if (g.values.size() != static_cast<std::size_t>(m + 1) || f.values.size() != static_cast<std::size_t>(m + 1))
        throw ArgumentError("grid function has wrong length");
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += g.values[k] * (f.values[k + 1] - f.values[k]);
    return s;
}

double SolutionPath::holder_seminorm(double gamma) const {
    double best = 0.0;
    const int m = grid.steps;
    for (int p = 0; p <= m; ++p)
        for (int q = p + 1; q <= m; ++q) {
            double n2 = 0.0;
            for (int i = 0; i < dim; ++i) {
                double dz = at(q, i) - at(p, i);
                n2 += dz * dz;
            }
            double ratio = std::sqrt(n2) / std::pow(grid.node(q) - grid.node(p), gamma);
            if (ratio > best) best = ratio;
        }
    return best;
}

SolutionPath euler_solve(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                         std::span<const double> initial) {
    const int m = model.m, d = model.d;
    if (initial.size() != static_cast<std::size_t>(m)) throw ArgumentError("initial value has wrong dimension");
    if (fbm.dim != d) throw ArgumentError("fBm dimension does not match the model noise dimension");
    if (theta.size() != static_cast<std::size_t>(model.q())) throw ArgumentError("parameter vector has wrong size");
    const int steps = fbm.grid.steps;
    const double dt = fbm.grid.dt();
    SolutionPath path{fbm.grid, m, std::vector<double>(static_cast<std::size_t>(steps + 1) * m)};
    std::copy(initial.begin(), initial.end(), path.values.begin());
    guard(path.state(0), 0, "Euler scheme diverged");
    std::vector<double> mu(m), sig(static_cast<std::size_t>(m) * d);
    for (int k = 0; k < steps; ++k) {
        const double* y = path.values.data() + static_cast<std::size_t>(k) * m;
        double* next = path.values.data() + static_cast<std::size_t>(k + 1) * m;
        model.drift->value(y, theta.data(), mu.data());
        model.diffusion->value(y, theta.data(), sig.data());
        for (int i = 0; i < m; ++i) {
            double v = y[i] + mu[i] * dt;
            for (int j = 0; j < d; ++j) v += sig[j * m + i] * fbm.increment(j, k);
            next[i] = v;
        }
        guard(path.state(k + 1), k + 1, "Euler scheme diverged");
    }
    return path;
}

SolutionPath linear_solve(const ControlledCoeffs& c, const FbmPath& fbm, std::span<const double> initial,
                          int start) {
    const int q = c.dim, d = c.noise_dim, steps = c.grid.steps;
    if (!(c.grid == fbm.grid) || fbm.dim != d) throw ArgumentError("linear_solve coefficients and fBm disagree");
    if (start < 0 || start > steps) throw ArgumentError("linear_solve start index outside the grid");
    if (initial.size() != static_cast<std::size_t>(q)) throw ArgumentError("linear_solve initial value has wrong size");
    const std::size_t qq = static_cast<std::size_t>(q) * q;
    if (c.drift.size() != steps * qq || c.diffusion.size() != steps * d * qq)
        throw ArgumentError("linear_solve coefficient paths have wrong size");
    const bool has_c = !c.drift_forcing.empty();
    const bool has_e = !c.diffusion_forcing.empty();
    if ((has_c && c.drift_forcing.size() != static_cast<std::size_t>(steps) * q) ||
        (has_e && c.diffusion_forcing.size() != static_cast<std::size_t>(steps) * d * q))
        throw ArgumentError("linear_solve forcing paths have wrong size");
    const double dt = c.grid.dt();
    SolutionPath z{c.grid, q, std::vector<double>(static_cast<std::size_t>(steps + 1) * q, 0.0)};
    std::copy(initial.begin(), initial.end(), z.values.begin() + static_cast<std::size_t>(start) * q);
    for (int k = start; k < steps; ++k) {
        const double* zk = z.values.data() + static_cast<std::size_t>(k) * q;
        double* zn = z.values.data() + static_cast<std::size_t>(k + 1) * q;
        const double* a = c.drift.data() + k * qq;
        for (int r = 0; r < q; ++r) {
            double drift = has_c ? c.drift_forcing[static_cast<std::size_t>(k) * q + r] : 0.0;
            for (int s = 0; s < q; ++s) drift += a[r * q + s] * zk[s];
            double v = zk[r] + drift * dt;
            for (int j = 0; j < d; ++j) {
                const double* b = c.diffusion.data() + (static_cast<std::size_t>(k) * d + j) * qq;
                double diff = has_e ? c.diffusion_forcing[(static_cast<std::size_t>(k) * d + j) * q + r] : 0.0;
                for (int s = 0; s < q; ++s) diff += b[r * q + s] * zk[s];
                v += diff * fbm.increment(j, k);
            }
            zn[r] = v;
        }
        guard(z.state(k + 1), k + 1, "linear equation diverged");
    }
    return z;
}

StepJacobians step_jacobians(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                             const SolutionPath& y) {
    const int m = model.m, d = model.d, steps = fbm.grid.steps;
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    StepJacobians out{m, steps, std::vector<double>(steps * mm)};
    std::vector<double> dmu(mm), dsig(d * mm);
    const double dt = fbm.grid.dt();
    for (int k = 0; k < steps; ++k) {
        const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
        model.drift->jacobian(yk, theta.data(), dmu.data());
        double* j = out.jac.data() + k * mm;
        for (std::size_t e = 0; e < mm; ++e) j[e] = dmu[e] * dt;
        for (int a = 0; a < m; ++a) j[a * m + a] += 1.0;
        if (!model.additive_noise) {
            model.diffusion->jacobian(yk, theta.data(), dsig.data());
            for (int ch = 0; ch < d; ++ch) {
                double db = fbm.increment(ch, k);
                for (std::size_t e = 0; e < mm; ++e) j[e] += dsig[ch * mm + e] * db;
            }
        }
    }
    return out;
}

}  // namespace fdemle
