#include "fdemle/chaos.hpp"

#include <algorithm>

#include "fdemle/errors.hpp"
#include "fdemle/malliavin.hpp"
#include "fdemle/pathwise.hpp"

namespace fdemle {

ChaosPolynomial::ChaosPolynomial(int vars) : vars_(vars) {
    if (vars < 1) throw ArgumentError("polynomial needs at least one variable");
}

ChaosPolynomial ChaosPolynomial::constant(int vars, const Dual& c) {
    ChaosPolynomial p(vars);
    p.terms_[Exponent(vars, 0)] = c;
    return p;
}

int ChaosPolynomial::degree() const {
    int best = 0;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (int x : e) s += x;
        best = std::max(best, s);
    }
    return best;
}

Dual ChaosPolynomial::coefficient(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Dual(0.0) : it->second;
}

ChaosPolynomial ChaosPolynomial::times_variable(int p) const {
    ChaosPolynomial out(vars_);
    for (const auto& [e, c] : terms_) {
        Exponent f = e;
        ++f[p];
        out.terms_[f] = c;
    }
    return out;
}

ChaosPolynomial ChaosPolynomial::derivative(int p) const {
    ChaosPolynomial out(vars_);
    for (const auto& [e, c] : terms_) {
        if (e[p] == 0) continue;
        Exponent f = e;
        --f[p];
        out.terms_[f] = c * static_cast<double>(e[p]);
    }
    return out;
}

ChaosPolynomial& ChaosPolynomial::axpy(const Dual& a, const ChaosPolynomial& other) {
    if (other.vars_ != vars_) throw ArgumentError("polynomial variable counts differ");
    for (const auto& [e, c] : other.terms_) terms_[e] += a * c;
    return *this;
}

Dual ChaosPolynomial::evaluate(std::span<const Dual> x) const {
    if (x.size() != static_cast<std::size_t>(vars_)) throw ArgumentError("polynomial evaluated at wrong dimension");
    const int deg = degree();
    std::vector<std::vector<Dual>> pw(vars_, std::vector<Dual>(deg + 1, Dual(1.0)));
    for (int p = 0; p < vars_; ++p)
        for (int k = 1; k <= deg; ++k) pw[p][k] = pw[p][k - 1] * x[p];
    Dual s(0.0);
    for (const auto& [e, c] : terms_) {
        Dual t = c;
        for (int p = 0; p < vars_; ++p)
            if (e[p] > 0) t *= pw[p][e[p]];
        s += t;
    }
    return s;
}

double ChaosPolynomial::evaluate(std::span<const double> x) const {
    std::vector<Dual> dx(x.begin(), x.end());
    return evaluate(dx).v;
}

ChaosPolynomial chaos_U(int p, const ChaosPolynomial& k, std::span<const Dual> gram) {
    const int m = k.vars();
    if (gram.size() != static_cast<std::size_t>(m) * m) throw ArgumentError("Gram matrix has wrong size");
    ChaosPolynomial out = k.times_variable(p);
    for (int pp = 0; pp < m; ++pp) out.axpy(-gram[pp * m + p], k.derivative(pp));
    return out;
}

ChaosPolynomial chaos_weight(const std::vector<int>& tuple, std::span<const Dual> gram, int m) {
    if (tuple.empty()) throw ArgumentError("weight tuple must not be empty");
    ChaosPolynomial k = ChaosPolynomial::constant(m, Dual(1.0));
    for (int j : tuple) {
        if (j < 1 || j > m) throw ArgumentError("weight index outside 1..m");
        k = chaos_U(j - 1, k, gram);
    }
    return k;
}

Dual dual_inner(std::span<const Dual> x, std::span<const Dual> y, std::span<const double> r, int d, int steps,
                int cells) {
    Dual s(0.0);
    std::vector<double> comp(cells), ty(cells);
    std::vector<Dual> tyd(cells);
    for (int j = 0; j < d; ++j) {
        const std::size_t off = static_cast<std::size_t>(j) * steps;
        for (int c = 0; c < cells; ++c) comp[c] = y[off + c].v;
        toeplitz_apply(r, comp, ty);
        for (int c = 0; c < cells; ++c) tyd[c] = Dual(ty[c]);
        for (int l = 0; l < kMaxParams; ++l) {
            bool any = false;
            for (int c = 0; c < cells; ++c) {
                comp[c] = y[off + c].g[l];
                any = any || comp[c] != 0.0;
            }
            if (!any) continue;
            toeplitz_apply(r, comp, ty);
            for (int c = 0; c < cells; ++c) tyd[c].g[l] = ty[c];
        }
        for (int c = 0; c < cells; ++c) s += x[off + c] * tyd[c];
    }
    return s;
}

namespace {

FbmPath zero_path(const TimeGrid& grid, HurstParam h, int d) {
    return FbmPath{grid, h, d, 0, std::vector<double>(static_cast<std::size_t>(d) * grid.steps, 0.0)};
}

using DMat = std::vector<Dual>;

DMat dual_mul(const DMat& a, const DMat& b, int m) {
    DMat c(static_cast<std::size_t>(m) * m, Dual(0.0));
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j) c[i * m + j] += a[i * m + k] * b[k * m + j];
    return c;
}

}  // namespace

std::vector<Dual> linear_mean(const ModelSpec& model, std::span<const double> theta, const TimeGrid& grid,
                              std::span<const double> start, int target) {
    if (target < 0) target = grid.steps;
    auto fbm = zero_path(grid, HurstParam(0.75), model.d);
    auto y = euler_solve(model, theta, fbm, start);
    auto gy = theta_gradient(model, theta, fbm, y);
    std::vector<Dual> out(model.m);
    for (int i = 0; i < model.m; ++i) {
        out[i] = Dual(y.at(target, i));
        for (int l = 0; l < model.q(); ++l) out[i].g[l] = gy(i, l, target);
    }
    return out;
}

LinearKernel linear_kernel(const ModelSpec& model, std::span<const double> theta, const TimeGrid& grid, HurstParam h,
                           int target) {
    if (!model.linear_additive()) throw CapabilityError("polynomial weights need a linear-drift additive-noise model");
    const int m = model.m, d = model.d, q = model.q(), steps = grid.steps, n = d * steps;
    if (q > kMaxParams) throw CapabilityError("too many parameters for forward-mode gradients");
    if (target < 0) target = steps;
    if (target < 1 || target > steps) throw ArgumentError("kernel target must be a node in 1..M");
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    const double dt = grid.dt();

    auto fbm = zero_path(grid, h, d);
    std::vector<double> zero(m, 0.0);
    auto y = euler_solve(model, theta, fbm, zero);
    auto gy = theta_gradient(model, theta, fbm, y);

    std::vector<double> dmu(mm), hmu(mm * m), tmu(q * mm), sig(m * d), dsig(d * mm), gsig(q * d * m);
    auto jac_at = [&](int k) {
        const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
        model.drift->jacobian(yk, theta.data(), dmu.data());
        model.drift->hessian(yk, theta.data(), hmu.data());
        model.drift->theta_jacobian(yk, theta.data(), tmu.data());
        DMat j(mm);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                Dual v((a == b ? 1.0 : 0.0) + dmu[a * m + b] * dt);
                for (int l = 0; l < q; ++l) {
                    double g = tmu[(l * m + a) * m + b];
                    for (int e = 0; e < m; ++e) g += hmu[(a * m + b) * m + e] * gy(e, l, k);
                    v.g[l] = g * dt;
                }
                j[a * m + b] = v;
            }
        return j;
    };

    LinearKernel k;
    k.grid = grid;
    k.m = m;
    k.d = d;
    k.q = q;
    k.target = target;
    k.rows.assign(static_cast<std::size_t>(m) * n, Dual(0.0));
    DMat lam(mm, Dual(0.0));
    for (int a = 0; a < m; ++a) lam[a * m + a] = Dual(1.0);
    for (int c = target - 1; c >= 0; --c) {
        if (c < target - 1) lam = dual_mul(lam, jac_at(c + 1), m);
        const double* yc = y.values.data() + static_cast<std::size_t>(c) * m;
        model.diffusion->value(yc, theta.data(), sig.data());
        model.diffusion->jacobian(yc, theta.data(), dsig.data());
        model.diffusion->theta_grad(yc, theta.data(), gsig.data());
        for (int j = 0; j < d; ++j) {
            std::vector<Dual> s(m);
            for (int a = 0; a < m; ++a) {
                Dual v(sig[j * m + a]);
                for (int l = 0; l < q; ++l) {
                    double g = gsig[(l * d + j) * m + a];
                    for (int e = 0; e < m; ++e) g += dsig[(j * m + a) * m + e] * gy(e, l, c);
                    v.g[l] = g;
                }
                s[a] = v;
            }
            for (int i = 0; i < m; ++i) {
                Dual v(0.0);
                for (int a = 0; a < m; ++a) v += lam[i * m + a] * s[a];
                k.rows[static_cast<std::size_t>(i) * n + j * steps + c] = v;
            }
        }
    }

    auto r = increment_autocovariance(grid, h);
    auto row = [&](const std::vector<Dual>& src, int i) {
        return std::span<const Dual>(src.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(n));
    };
    k.gamma.assign(mm, Dual(0.0));
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            k.gamma[a * m + b] = dual_inner(row(k.rows, a), row(k.rows, b), r, d, steps, target);
            k.gamma[b * m + a] = k.gamma[a * m + b];
        }
    Eigen::MatrixXd g(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) g(a, b) = k.gamma[a * m + b].v;
    Eigen::MatrixXd eta = invert_checked(g, target);
    k.eta.assign(mm, Dual(0.0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) k.eta[a * m + b] = Dual(eta(a, b));
    for (int l = 0; l < q; ++l) {
        Eigen::MatrixXd dg(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) dg(a, b) = k.gamma[a * m + b].g[l];
        Eigen::MatrixXd de = -eta * dg * eta;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) k.eta[a * m + b].g[l] = de(a, b);
    }

    std::vector<Dual> qrows(static_cast<std::size_t>(m) * n, Dual(0.0));
    for (int p = 0; p < m; ++p)
        for (int u = 0; u < n; ++u) {
            Dual v(0.0);
            for (int j = 0; j < m; ++j) v += k.eta[p * m + j] * k.rows[static_cast<std::size_t>(j) * n + u];
            qrows[static_cast<std::size_t>(p) * n + u] = v;
        }
    k.gram.assign(mm, Dual(0.0));
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            k.gram[a * m + b] = dual_inner(row(qrows, a), row(qrows, b), r, d, steps, target);
            k.gram[b * m + a] = k.gram[a * m + b];
        }
    return k;
}

}  // namespace fdemle
