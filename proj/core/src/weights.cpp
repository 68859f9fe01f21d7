#include "fdemle/weights.hpp"

namespace fdemle {

namespace {

int resolve_target(const FbmPath& fbm, int target) {
    if (target < 0) target = fbm.grid.steps;
    if (target < 1 || target > fbm.grid.steps) throw ArgumentError("weight target must be a node in 1..M");
    return target;
}

}  // namespace

WeightBundle<double> make_bundle(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                 std::span<const double> initial, int target) {
    const int t = resolve_target(fbm, target);
    const int m = model.m, d = model.d, steps = fbm.grid.steps, n = d * steps;
    auto y = euler_solve(model, theta, fbm, initial);
    auto d1 = derivative_first(model, theta, fbm, y);
    auto r = increment_autocovariance(fbm.grid, fbm.hurst);
    Eigen::MatrixXd eta = invert_checked(malliavin_matrix(d1, r, t), t);

    WeightBundle<double> b;
    b.grid = fbm.grid;
    b.m = m;
    b.d = d;
    b.target = t;
    b.q_deterministic = model.linear_additive();
    b.increments = fbm.increments;
    b.r = r;
    b.q.assign(static_cast<std::size_t>(m) * n, 0.0);
    for (int p = 0; p < m; ++p)
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < t; ++c) {
                double s = 0.0;
                for (int j = 0; j < m; ++j) s += eta(p, j) * d1(j, i, c, t);
                b.q[static_cast<std::size_t>(p) * n + i * steps + c] = s;
            }

    if (!b.q_deterministic) {
        auto d2 = derivative_second(model, theta, fbm, y, d1, t);
        auto du = [&](int a, int u) { return u % steps < t ? d1(a, u / steps, u % steps, t) : 0.0; };
        auto ddu = [&](int a, int w, int u) {
            if (w % steps >= t || u % steps >= t) return 0.0;
            return d2(a, w / steps, w % steps, u / steps, u % steps);
        };
        // rd[b*n + u] = Σ_{u'} r(u,u') D_{u'} Y^b_t
        std::vector<double> rd(static_cast<std::size_t>(m) * n, 0.0), col(t), tmp(t);
        for (int bb = 0; bb < m; ++bb)
            for (int i = 0; i < d; ++i) {
                for (int c = 0; c < t; ++c) col[c] = d1(bb, i, c, t);
                toeplitz_apply(r, col, tmp);
                std::copy(tmp.begin(), tmp.end(), rd.begin() + static_cast<std::ptrdiff_t>(bb) * n + i * steps);
            }
        b.dq.assign(static_cast<std::size_t>(m) * n * n, 0.0);
        Eigen::MatrixXd dg(m, m), deta(m, m);
        for (int w = 0; w < n; ++w) {
            if (w % steps >= t) continue;
            dg.setZero();
            for (int a = 0; a < m; ++a)
                for (int bb = 0; bb < m; ++bb) {
                    double s = 0.0;
                    for (int u = 0; u < n; ++u) s += ddu(a, w, u) * rd[static_cast<std::size_t>(bb) * n + u];
                    dg(a, bb) += s;
                    dg(bb, a) += s;
                }
            deta = -eta * dg * eta;
            for (int p = 0; p < m; ++p)
                for (int u = 0; u < n; ++u) {
                    if (u % steps >= t) continue;
                    double s = 0.0;
                    for (int j = 0; j < m; ++j) s += deta(p, j) * du(j, u) + eta(p, j) * ddu(j, w, u);
                    b.dq[(static_cast<std::size_t>(p) * n + u) * n + w] = s;
                }
        }
    }
    b.prepare();
    return b;
}

WeightBundle<Dual> make_dual_bundle(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                    std::span<const double> initial, int target) {
    if (!model.linear_additive())
        throw CapabilityError("θ-gradients of weights are implemented for linear-drift additive-noise models");
    const int q = model.q();
    if (q > kMaxParams) throw CapabilityError("too many parameters for forward-mode gradients");
    const int t = resolve_target(fbm, target);
    const int m = model.m, d = model.d, steps = fbm.grid.steps, n = d * steps;
    auto y = euler_solve(model, theta, fbm, initial);
    auto d1 = derivative_first(model, theta, fbm, y);
    auto gy = theta_gradient(model, theta, fbm, y);
    auto gd1 = grad_derivative_first(model, theta, fbm, y, gy, d1);
    auto r = increment_autocovariance(fbm.grid, fbm.hurst);
    Eigen::MatrixXd eta = invert_checked(malliavin_matrix(d1, r, t), t);
    auto gg = grad_malliavin_matrix(d1, gd1, r, t);
    std::vector<Eigen::MatrixXd> geta;
    for (const auto& g : gg) geta.push_back(-eta * g * eta);

    WeightBundle<Dual> b;
    b.grid = fbm.grid;
    b.m = m;
    b.d = d;
    b.target = t;
    b.q_deterministic = true;
    b.increments = fbm.increments;
    b.r = r;
    b.q.assign(static_cast<std::size_t>(m) * n, Dual(0.0));
    for (int p = 0; p < m; ++p)
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < t; ++c) {
                Dual s(0.0);
                for (int j = 0; j < m; ++j) {
                    s.v += eta(p, j) * d1(j, i, c, t);
                    for (int l = 0; l < q; ++l)
                        s.g[l] += geta[l](p, j) * d1(j, i, c, t) + eta(p, j) * gd1[l](j, i, c, t);
                }
                b.q[static_cast<std::size_t>(p) * n + i * steps + c] = s;
            }
    b.prepare();
    return b;
}

std::vector<double> grad_h_weight(const std::vector<int>& tuple, const WeightBundle<Dual>& b, int q) {
    auto w = h_weight(tuple, b);
    return {w.value.g.begin(), w.value.g.begin() + q};
}

}  // namespace fdemle
