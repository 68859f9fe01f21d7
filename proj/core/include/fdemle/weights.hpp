#pragma once

#include <span>
#include <vector>

#include "fdemle/dual.hpp"
#include "fdemle/errors.hpp"
#include "fdemle/malliavin.hpp"

namespace fdemle {

// Kernel data for the U_p operators at a target node t. Flattened cell index u = i*M + c.
//   q[p*dM + u]            = Q^{p,i}_c = Σ_j η_t^{pj} D^i_c Y^j_t (zero for c >= t)
//   dq[(p*dM + u)*dM + w]  = D_w Q^{p}_u, only when Q is random
template <class S>
struct WeightBundle {
    TimeGrid grid{1.0, 1};
    int m = 0;
    int d = 0;
    int target = 0;
    bool q_deterministic = true;
    std::vector<double> increments;
    std::vector<double> r;
    std::vector<S> q;
    std::vector<S> dq;

    // Filled by prepare().
    std::vector<S> young;  // Σ_u Q^p_u δB_u
    std::vector<S> rq;     // Σ_w r(u,w) Q^p_w
    std::vector<S> trace;  // Σ_{u,w} D_u Q^p_w r(u,w)

    int cells() const { return d * grid.steps; }
    double cov(int u, int w) const {
        const int mm = grid.steps;
        if (u / mm != w / mm) return 0.0;
        int lag = u % mm - w % mm;
        return r[lag < 0 ? -lag : lag];
    }
    void prepare();
};

// Running kernel of the weight recursion with up to two Malliavin derivative arrays.
// chaos is an upper bound on the Wiener-chaos order (derivatives beyond it vanish),
// or -1 when unknown.
template <class S>
struct GridKernel {
    S value{};
    int chaos = 0;
    bool has_d1 = false;
    bool has_d2 = false;
    std::vector<S> d1;  // dM
    std::vector<S> d2;  // dM x dM

    static GridKernel unit() {
        GridKernel k;
        k.value = S(1.0);
        return k;
    }
};

template <class S>
struct WeightValue {
    std::vector<int> tuple;
    S value{};
    std::vector<GridKernel<S>> levels;
};

template <class S>
void WeightBundle<S>::prepare() {
    const int n = cells();
    const int mm = grid.steps;
    young.assign(m, S(0.0));
    rq.assign(static_cast<std::size_t>(m) * n, S(0.0));
    trace.assign(m, S(0.0));
    for (int p = 0; p < m; ++p) {
        const S* qp = q.data() + static_cast<std::size_t>(p) * n;
        S acc(0.0);
        for (int u = 0; u < n; ++u) acc += qp[u] * increments[u];
        young[p] = acc;
        for (int i = 0; i < d; ++i)
            for (int a = 0; a < target; ++a) {
                S s(0.0);
                for (int b = 0; b < target; ++b) {
                    int lag = a > b ? a - b : b - a;
                    s += qp[i * mm + b] * r[lag];
                }
                rq[static_cast<std::size_t>(p) * n + i * mm + a] = s;
            }
        if (!q_deterministic) {
            S t(0.0);
            const S* dqp = dq.data() + static_cast<std::size_t>(p) * n * n;
            for (int i = 0; i < d; ++i)
                for (int a = 0; a < target; ++a)
                    for (int b = 0; b < target; ++b) {
                        int lag = a > b ? a - b : b - a;
                        t += dqp[static_cast<std::size_t>(i * mm + b) * n + i * mm + a] * r[lag];
                    }
            trace[p] = t;
        }
    }
}

// One application G -> U_p(G) = δ(G Q^p), returning derivative arrays up to `orders`.
template <class S>
GridKernel<S> skorohod_U(int p, const GridKernel<S>& g, const WeightBundle<S>& b, int orders) {
    const int n = b.cells();
    const std::size_t off = static_cast<std::size_t>(p) * n;
    const bool g_d1 = g.chaos != 0;
    const bool g_d2 = g.chaos < 0 || g.chaos >= 2;
    if (g_d1 && !g.has_d1) throw CapabilityError("U_p needs the first derivative array of its argument");
    if (orders >= 1 && !b.q_deterministic)
        throw CapabilityError("derivatives of U_p with a random Q need third derivatives of Y");
    if (orders >= 1 && g_d2 && !g.has_d2) throw CapabilityError("U_p needs the second derivative array of its argument");
    if (orders >= 2 && (g.chaos < 0 || g.chaos > 2))
        throw CapabilityError("second derivative of U_p needs an argument of chaos order at most two");
    if (orders > 2) throw CapabilityError("derivative arrays above order two are not stored");

    GridKernel<S> out;
    out.chaos = (g.chaos < 0 || !b.q_deterministic) ? -1 : g.chaos + 1;
    S v = g.value * b.young[p];
    if (!b.q_deterministic) v -= g.value * b.trace[p];
    if (g_d1)
        for (int u = 0; u < n; ++u) v -= g.d1[u] * b.rq[off + u];
    out.value = v;

    if (orders >= 1) {
        out.has_d1 = true;
        out.d1.assign(n, S(0.0));
        for (int u = 0; u < n; ++u) {
            S s = g.value * b.q[off + u];
            if (g_d1) s += g.d1[u] * b.young[p];
            if (g_d2) {
                const S* row = g.d2.data() + static_cast<std::size_t>(u) * n;
                for (int w = 0; w < n; ++w) s -= row[w] * b.rq[off + w];
            }
            out.d1[u] = s;
        }
    }
    if (orders >= 2) {
        out.has_d2 = true;
        out.d2.assign(static_cast<std::size_t>(n) * n, S(0.0));
        for (int u = 0; u < n; ++u)
            for (int w = 0; w < n; ++w) {
                S s(0.0);
                if (g_d1) s = g.d1[u] * b.q[off + w] + g.d1[w] * b.q[off + u];
                if (g_d2) s += g.d2[static_cast<std::size_t>(u) * n + w] * b.young[p];
                out.d2[static_cast<std::size_t>(u) * n + w] = s;
            }
    }
    return out;
}

// H_{(j1..jn)} = U_{jn} ∘ ... ∘ U_{j1}(1); indices are 1-based.
template <class S>
WeightValue<S> h_weight(const std::vector<int>& tuple, const WeightBundle<S>& b) {
    WeightValue<S> w;
    w.tuple = tuple;
    const int n = static_cast<int>(tuple.size());
    if (n == 0) throw ArgumentError("weight tuple must not be empty");
    GridKernel<S> k = GridKernel<S>::unit();
    for (int r = 1; r <= n; ++r) {
        int p = tuple[r - 1] - 1;
        if (p < 0 || p >= b.m) throw ArgumentError("weight index outside 1..m");
        int orders = n - r;
        if (b.q_deterministic) orders = std::min(orders, r);
        else if (orders > 0)
            throw CapabilityError("weights of depth above one need third derivatives for this model class");
        k = skorohod_U(p, k, b, orders);
        w.levels.push_back(k);
    }
    w.value = k.value;
    return w;
}

// Generic bundle for any supported model: random Q uses second derivatives of Y.
WeightBundle<double> make_bundle(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                 std::span<const double> initial, int target = -1);

// Bundle with θ-gradients carried by Dual numbers; linear-drift additive-noise models only.
WeightBundle<Dual> make_dual_bundle(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                    std::span<const double> initial, int target = -1);

// ∇_l H for a tuple, via the Dual recursion.
std::vector<double> grad_h_weight(const std::vector<int>& tuple, const WeightBundle<Dual>& b, int q);

}  // namespace fdemle
