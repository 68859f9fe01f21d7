#include "fdemle/malliavin.hpp"

#include <algorithm>
#include <cmath>

#include "fdemle/dual.hpp"
#include "fdemle/errors.hpp"

namespace fdemle {

namespace {

// σ(Y_k) for all nodes k < M, channel-major per node.
std::vector<double> diffusion_path(const ModelSpec& model, std::span<const double> theta, const SolutionPath& y) {
    const int m = model.m, d = model.d, steps = y.grid.steps;
    std::vector<double> out(static_cast<std::size_t>(steps + 1) * m * d);
    for (int k = 0; k <= steps; ++k)
        model.diffusion->value(y.values.data() + static_cast<std::size_t>(k) * m, theta.data(),
                               out.data() + static_cast<std::size_t>(k) * m * d);
    return out;
}

void apply(const double* jac, const double* v, double* out, int m) {
    for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) s += jac[a * m + b] * v[b];
        out[a] = s;
    }
}

// Σ_{c,c'<t} x_c r_{|c-c'|} y_{c'}
double quad(std::span<const double> x, std::span<const double> y, std::span<const double> r, int t) {
    std::vector<double> ry(t);
    toeplitz_apply(r, y.first(t), ry);
    double s = 0.0;
    for (int c = 0; c < t; ++c) s += x[c] * ry[c];
    return s;
}

template <class S>
using Mat = std::vector<S>;  // m×m row-major

// One Euler step of the inverse-matrix equation:
// E' = E - (E A + Aᵀ E)Δ - Σ_ch (E B_ch + B_chᵀ E) δB^ch - E P E
template <class S>
Mat<S> eta_step(const Mat<S>& e, const Mat<S>& a, const std::vector<Mat<S>>& bch, const std::vector<double>& db,
                const Mat<S>& p, double dt, int m) {
    Mat<S> out = e;
    auto at = [m](const Mat<S>& x, int i, int j) -> const S& { return x[i * m + j]; };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            S lin(0.0);
            for (int k = 0; k < m; ++k) lin += at(e, i, k) * at(a, k, j) + at(a, k, i) * at(e, k, j);
            S acc = lin * dt;
            for (std::size_t ch = 0; ch < bch.size(); ++ch) {
                S nz(0.0);
                for (int k = 0; k < m; ++k) nz += at(e, i, k) * at(bch[ch], k, j) + at(bch[ch], k, i) * at(e, k, j);
                acc += nz * db[ch];
            }
            S quadratic(0.0);
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) quadratic += at(e, i, k) * at(p, k, l) * at(e, l, j);
            out[i * m + j] = at(e, i, j) - acc - quadratic;
        }
    return out;
}

// Inputs of the inverse-matrix recursion at one node, as scalars of type S.
template <class S>
struct EtaNode {
    Mat<S> dmu;
    std::vector<Mat<S>> dsig;
    std::vector<S> sig;  // channel-major m×d
};

// P_k = S_k + S_kᵀ + Σ_j σ^{·j}σ^{·j}ᵀ r_0, with S_k^{ab} = Σ_j Σ_{c<k} D^j_c Y^a_k r_{k-c} σ^{bj}.
template <class S, class DFn>
Mat<S> boundary_term(int k, int m, int d, const std::vector<S>& sig, DFn dval, std::span<const double> r) {
    Mat<S> p(static_cast<std::size_t>(m) * m, S(0.0));
    for (int j = 0; j < d; ++j) {
        std::vector<S> v(m, S(0.0));
        for (int c = 0; c < k; ++c)
            for (int a = 0; a < m; ++a) v[a] += dval(a, j, c, k) * r[k - c];
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                S sab = v[a] * sig[j * m + b];
                p[a * m + b] += sab;
                p[b * m + a] += sab;
                p[a * m + b] += sig[j * m + a] * sig[j * m + b] * r[0];
            }
    }
    return p;
}

}  // namespace

std::vector<double> FirstDerivative::column(int i, int j, int t) const {
    std::vector<double> out(t);
    for (int c = 0; c < t; ++c) out[c] = (*this)(i, j, c, t);
    return out;
}

SolutionPath ThetaGradient::path(int l) const {
    SolutionPath p{grid, m, std::vector<double>(static_cast<std::size_t>(grid.steps + 1) * m)};
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(l) * (grid.steps + 1) * m,
              data.begin() + static_cast<std::ptrdiff_t>(l + 1) * (grid.steps + 1) * m, p.values.begin());
    return p;
}

FirstDerivative derivative_first(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                 const SolutionPath& y) {
    const int m = model.m, d = model.d, steps = fbm.grid.steps;
    if (!(y.grid == fbm.grid)) throw ArgumentError("solution and fBm grids differ");
    auto jac = step_jacobians(model, theta, fbm, y);
    auto sig = diffusion_path(model, theta, y);
    FirstDerivative out{fbm.grid, m, d,
                        std::vector<double>(static_cast<std::size_t>(d) * steps * (steps + 1) * m, 0.0)};
    for (int j = 0; j < d; ++j)
        for (int c = 0; c < steps; ++c) {
            double* v = out.data.data() + out.index(0, j, c, c + 1);
            const double* s = sig.data() + (static_cast<std::size_t>(c) * d + j) * m;
            std::copy(s, s + m, v);
            for (int k = c + 1; k < steps; ++k) {
                apply(jac.at(k), v, v + m, m);
                for (int i = 0; i < m; ++i)
                    if (!std::isfinite(v[m + i]) || std::abs(v[m + i]) > 1e12)
                        throw DivergenceError("Malliavin derivative diverged (cell " + std::to_string(c) +
                                                  ", channel " + std::to_string(j) + ")",
                                              k + 1);
                v += m;
            }
        }
    return out;
}

SecondDerivative derivative_second(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                   const SolutionPath& y, const FirstDerivative& d1, int target) {
    const int m = model.m, d = model.d, steps = fbm.grid.steps;
    if (target < 0) target = steps;
    if (target > steps) throw ArgumentError("target node outside the grid");
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    const double dt = fbm.grid.dt();
    auto jac = step_jacobians(model, theta, fbm, y);
    // T_k[(a*m+b)*m+e] = ∂_b∂_e μ^a Δ + Σ_ch ∂_b∂_e σ^{a,ch} δB^ch_k
    std::vector<double> tens(static_cast<std::size_t>(steps) * mm * m, 0.0);
    std::vector<double> dsig(static_cast<std::size_t>(steps) * d * mm, 0.0);
    {
        std::vector<double> h(mm * m), hs(d * mm * m);
        for (int k = 0; k < target; ++k) {
            const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
            model.drift->hessian(yk, theta.data(), h.data());
            model.diffusion->hessian(yk, theta.data(), hs.data());
            model.diffusion->jacobian(yk, theta.data(), dsig.data() + static_cast<std::size_t>(k) * d * mm);
            double* t = tens.data() + static_cast<std::size_t>(k) * mm * m;
            for (std::size_t e = 0; e < mm * m; ++e) {
                double v = h[e] * dt;
                for (int ch = 0; ch < d; ++ch) v += hs[ch * mm * m + e] * fbm.increment(ch, k);
                t[e] = v;
            }
        }
    }
    using Mat = Eigen::MatrixXd;
    auto jmat = [&](int k) { return Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(jac.at(k), m, m); };
    // lam[k] = J_{t-1} ... J_{k+1}, the propagator from node k+1 to the target.
    std::vector<Mat> lam(std::max(target, 1), Mat::Identity(m, m));
    for (int k = target - 2; k >= 0; --k) lam[k] = lam[k + 1] * jmat(k + 1);

    SecondDerivative out{fbm.grid, m, d, target,
                         std::vector<double>(static_cast<std::size_t>(d) * steps * d * steps * m, 0.0)};
    Mat tw(m, m), phi(m, m), g(m, m);
    Eigen::VectorXd zi(m), u0(m), val(m);
    for (int jl = 0; jl < d; ++jl)
        for (int c = 0; c < target; ++c) {
            // g = Σ_{k>c} lam_k T_k[Φ(k,c+1) ·, D_L Y_k]
            g.setZero();
            phi.setIdentity();
            for (int k = c + 1; k < target; ++k) {
                const double* t = tens.data() + static_cast<std::size_t>(k) * mm * m;
                const double* w = d1.data.data() + d1.index(0, jl, c, k);
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) {
                        double s = 0.0;
                        for (int e = 0; e < m; ++e) s += t[(a * m + b) * m + e] * w[e];
                        tw(a, b) = s;
                    }
                g.noalias() += lam[k] * tw * phi;
                phi = jmat(k) * phi;
            }
            const double* bl = dsig.data() + (static_cast<std::size_t>(c) * d + jl) * mm;
            for (int je = 0; je < d; ++je)
                for (int ce = 0; ce <= c; ++ce) {
                    for (int i = 0; i < m; ++i) u0[i] = d1(i, je, ce, c + 1);
                    zi.setZero();
                    if (ce < c) {
                        const double* v = d1.data.data() + d1.index(0, je, ce, c);
                        for (int a = 0; a < m; ++a) {
                            double s = 0.0;
                            for (int b = 0; b < m; ++b) s += bl[a * m + b] * v[b];
                            zi[a] = s;
                        }
                    }
                    val.noalias() = lam[c] * zi + g * u0;
                    for (int i = 0; i < m; ++i) {
                        out.data[out.index(i, je, ce, jl, c)] = val[i];
                        out.data[out.index(i, jl, c, je, ce)] = val[i];
                    }
                }
        }
    return out;
}

ThetaGradient theta_gradient(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                             const SolutionPath& y) {
    const int m = model.m, d = model.d, q = model.q(), steps = fbm.grid.steps;
    const double dt = fbm.grid.dt();
    auto jac = step_jacobians(model, theta, fbm, y);
    ThetaGradient out{fbm.grid, m, q, std::vector<double>(static_cast<std::size_t>(q) * (steps + 1) * m, 0.0)};
    std::vector<double> gmu(static_cast<std::size_t>(q) * m), gsig(static_cast<std::size_t>(q) * d * m);
    std::vector<double> tmp(m);
    for (int k = 0; k < steps; ++k) {
        const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
        model.drift->theta_grad(yk, theta.data(), gmu.data());
        model.diffusion->theta_grad(yk, theta.data(), gsig.data());
        for (int l = 0; l < q; ++l) {
            double* zk = out.data.data() + (static_cast<std::size_t>(l) * (steps + 1) + k) * m;
            double* zn = zk + m;
            apply(jac.at(k), zk, tmp.data(), m);
            for (int i = 0; i < m; ++i) {
                double v = tmp[i] + gmu[l * m + i] * dt;
                for (int j = 0; j < d; ++j) v += gsig[(l * d + j) * m + i] * fbm.increment(j, k);
                zn[i] = v;
            }
        }
    }
    return out;
}

std::vector<FirstDerivative> grad_derivative_first(const ModelSpec& model, std::span<const double> theta,
                                                   const FbmPath& fbm, const SolutionPath& y,
                                                   const ThetaGradient& grad_y, const FirstDerivative& d1) {
    const int m = model.m, d = model.d, q = model.q(), steps = fbm.grid.steps;
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    const double dt = fbm.grid.dt();
    auto jac = step_jacobians(model, theta, fbm, y);
    // gj[(l*M + k)*mm]: ∇_l J_k ; gs[((l*M + k)*d + j)*m]: ∇_l σ^{·j}(Y_k)
    std::vector<double> gj(static_cast<std::size_t>(q) * steps * mm, 0.0);
    std::vector<double> gs(static_cast<std::size_t>(q) * steps * d * m, 0.0);
    {
        std::vector<double> hmu(mm * m), hsig(d * mm * m), tmu(q * mm), tsig(q * d * mm), dsig(d * mm),
            gsig(q * d * m);
        for (int k = 0; k < steps; ++k) {
            const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
            model.drift->hessian(yk, theta.data(), hmu.data());
            model.diffusion->hessian(yk, theta.data(), hsig.data());
            model.drift->theta_jacobian(yk, theta.data(), tmu.data());
            model.diffusion->theta_jacobian(yk, theta.data(), tsig.data());
            model.diffusion->jacobian(yk, theta.data(), dsig.data());
            model.diffusion->theta_grad(yk, theta.data(), gsig.data());
            for (int l = 0; l < q; ++l) {
                double* g = gj.data() + (static_cast<std::size_t>(l) * steps + k) * mm;
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) {
                        double v = tmu[(l * m + a) * m + b];
                        for (int e = 0; e < m; ++e) v += hmu[(a * m + b) * m + e] * grad_y(e, l, k);
                        v *= dt;
                        for (int ch = 0; ch < d; ++ch) {
                            double w = tsig[((l * d + ch) * m + a) * m + b];
                            for (int e = 0; e < m; ++e) w += hsig[((ch * m + a) * m + b) * m + e] * grad_y(e, l, k);
                            v += w * fbm.increment(ch, k);
                        }
                        g[a * m + b] = v;
                    }
                for (int j = 0; j < d; ++j)
                    for (int a = 0; a < m; ++a) {
                        double v = gsig[(l * d + j) * m + a];
                        for (int e = 0; e < m; ++e) v += dsig[(j * m + a) * m + e] * grad_y(e, l, k);
                        gs[((static_cast<std::size_t>(l) * steps + k) * d + j) * m + a] = v;
                    }
            }
        }
    }
    std::vector<FirstDerivative> out;
    std::vector<double> tmp(m), tmp2(m);
    for (int l = 0; l < q; ++l) {
        FirstDerivative g{fbm.grid, m, d, std::vector<double>(d1.data.size(), 0.0)};
        for (int j = 0; j < d; ++j)
            for (int c = 0; c < steps; ++c) {
                double* z = g.data.data() + g.index(0, j, c, c + 1);
                const double* s = gs.data() + ((static_cast<std::size_t>(l) * steps + c) * d + j) * m;
                std::copy(s, s + m, z);
                for (int k = c + 1; k < steps; ++k) {
                    apply(jac.at(k), z, tmp.data(), m);
                    apply(gj.data() + (static_cast<std::size_t>(l) * steps + k) * mm,
                          d1.data.data() + d1.index(0, j, c, k), tmp2.data(), m);
                    for (int a = 0; a < m; ++a) z[m + a] = tmp[a] + tmp2[a];
                    z += m;
                }
            }
        out.push_back(std::move(g));
    }
    return out;
}

Eigen::MatrixXd malliavin_matrix(const FirstDerivative& d1, std::span<const double> r, int t) {
    const int m = d1.m, d = d1.d;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < d; ++j) {
        std::vector<std::vector<double>> cols(m);
        for (int a = 0; a < m; ++a) cols[a] = d1.column(a, j, t);
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) g(a, b) += quad(cols[a], cols[b], r, t);
    }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < a; ++b) g(a, b) = g(b, a);
    return g;
}

std::vector<Eigen::MatrixXd> grad_malliavin_matrix(const FirstDerivative& d1,
                                                   const std::vector<FirstDerivative>& grad_d1,
                                                   std::span<const double> r, int t) {
    const int m = d1.m, d = d1.d;
    std::vector<Eigen::MatrixXd> out;
    for (const auto& gd : grad_d1) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
        for (int j = 0; j < d; ++j) {
            std::vector<std::vector<double>> cols(m), gcols(m);
            for (int a = 0; a < m; ++a) {
                cols[a] = d1.column(a, j, t);
                gcols[a] = gd.column(a, j, t);
            }
            for (int a = 0; a < m; ++a)
                for (int b = a; b < m; ++b)
                    g(a, b) += quad(gcols[a], cols[b], r, t) + quad(cols[a], gcols[b], r, t);
        }
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < a; ++b) g(a, b) = g(b, a);
        out.push_back(g);
    }
    return out;
}

Eigen::MatrixXd invert_checked(const Eigen::MatrixXd& gamma, int node, double max_condition) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition)) throw SingularityError("Malliavin matrix is near singular", node, cond);
    Eigen::MatrixXd inv = gamma.ldlt().solve(Eigen::MatrixXd::Identity(gamma.rows(), gamma.cols()));
    return 0.5 * (inv + inv.transpose());
}

MalliavinMatrixPath malliavin_matrix_path(const FirstDerivative& d1, HurstParam h) {
    auto r = increment_autocovariance(d1.grid, h);
    MalliavinMatrixPath out;
    out.gamma.reserve(d1.grid.steps + 1);
    out.gamma.push_back(Eigen::MatrixXd::Zero(d1.m, d1.m));
    for (int t = 1; t <= d1.grid.steps; ++t) out.gamma.push_back(malliavin_matrix(d1, r, t));
    return out;
}

void inverse_matrix_path(MalliavinMatrixPath& path, const ModelSpec& model, std::span<const double> theta,
                         const FbmPath& fbm, const SolutionPath& y, const FirstDerivative& d1, int sde_start) {
    const int m = model.m, d = model.d, steps = fbm.grid.steps;
    path.eta.assign(steps + 1, Eigen::MatrixXd());
    for (int t = 1; t <= steps; ++t) path.eta[t] = invert_checked(path.gamma[t], t);

    if (sde_start <= 0) sde_start = std::max(1, steps / 8);
    path.sde_start = sde_start;
    path.eta_sde.assign(steps + 1, Eigen::MatrixXd());
    auto r = increment_autocovariance(fbm.grid, fbm.hurst);
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    Mat<double> e(path.eta[sde_start].data(), path.eta[sde_start].data() + mm);
    path.eta_sde[sde_start] = path.eta[sde_start];
    std::vector<double> dmu(mm), dsig(d * mm), sig(static_cast<std::size_t>(m) * d), db(d);
    for (int k = sde_start; k < steps; ++k) {
        const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
        model.drift->jacobian(yk, theta.data(), dmu.data());
        model.diffusion->jacobian(yk, theta.data(), dsig.data());
        model.diffusion->value(yk, theta.data(), sig.data());
        std::vector<Mat<double>> bch(d);
        for (int ch = 0; ch < d; ++ch) {
            bch[ch].assign(dsig.begin() + ch * mm, dsig.begin() + (ch + 1) * mm);
            db[ch] = fbm.increment(ch, k);
        }
        auto p = boundary_term<double>(k, m, d, sig, [&](int a, int j, int c, int kk) { return d1(a, j, c, kk); }, r);
        e = eta_step<double>(e, dmu, bch, db, p, fbm.grid.dt(), m);
        path.eta_sde[k + 1] = Eigen::Map<const Eigen::MatrixXd>(e.data(), m, m).transpose();
    }
}

std::vector<std::vector<Eigen::MatrixXd>> grad_eta(const MalliavinMatrixPath& path, const FirstDerivative& d1,
                                                   const std::vector<FirstDerivative>& grad_d1, HurstParam h) {
    auto r = increment_autocovariance(d1.grid, h);
    const int steps = d1.grid.steps;
    std::vector<std::vector<Eigen::MatrixXd>> out(grad_d1.size(), std::vector<Eigen::MatrixXd>(steps + 1));
    for (int t = 1; t <= steps; ++t) {
        auto gg = grad_malliavin_matrix(d1, grad_d1, r, t);
        for (std::size_t l = 0; l < gg.size(); ++l) out[l][t] = -path.eta[t] * gg[l] * path.eta[t];
    }
    return out;
}

std::vector<std::vector<Eigen::MatrixXd>> grad_eta_sde(const MalliavinMatrixPath& path,
                                                       const std::vector<std::vector<Eigen::MatrixXd>>& grad_eta_direct,
                                                       const ModelSpec& model, std::span<const double> theta,
                                                       const FbmPath& fbm, const SolutionPath& y,
                                                       const ThetaGradient& grad_y, const FirstDerivative& d1,
                                                       const std::vector<FirstDerivative>& grad_d1) {
    const int m = model.m, d = model.d, q = model.q(), steps = fbm.grid.steps;
    if (q > kMaxParams) throw CapabilityError("too many parameters for forward-mode gradients");
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    auto r = increment_autocovariance(fbm.grid, fbm.hurst);
    const int k0 = path.sde_start;
    Mat<Dual> e(mm);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            Dual v(path.eta[k0](a, b));
            for (int l = 0; l < q; ++l) v.g[l] = grad_eta_direct[l][k0](a, b);
            e[a * m + b] = v;
        }
    std::vector<std::vector<Eigen::MatrixXd>> out(q, std::vector<Eigen::MatrixXd>(steps + 1));
    for (int l = 0; l < q; ++l) out[l][k0] = grad_eta_direct[l][k0];

    std::vector<double> dmu(mm), dsig(d * mm), sig(m * d), hmu(mm * m), hsig(d * mm * m), tmu(q * mm),
        tsig(q * d * mm), gsig(q * d * m), db(d);
    for (int k = k0; k < steps; ++k) {
        const double* yk = y.values.data() + static_cast<std::size_t>(k) * m;
        model.drift->jacobian(yk, theta.data(), dmu.data());
        model.diffusion->jacobian(yk, theta.data(), dsig.data());
        model.diffusion->value(yk, theta.data(), sig.data());
        model.drift->hessian(yk, theta.data(), hmu.data());
        model.diffusion->hessian(yk, theta.data(), hsig.data());
        model.drift->theta_jacobian(yk, theta.data(), tmu.data());
        model.diffusion->theta_jacobian(yk, theta.data(), tsig.data());
        model.diffusion->theta_grad(yk, theta.data(), gsig.data());
        Mat<Dual> a(mm);
        std::vector<Mat<Dual>> bch(d, Mat<Dual>(mm));
        std::vector<Dual> sd(static_cast<std::size_t>(m) * d);
        for (int i = 0; i < m; ++i)
            for (int b = 0; b < m; ++b) {
                Dual v(dmu[i * m + b]);
                for (int l = 0; l < q; ++l) {
                    double g = tmu[(l * m + i) * m + b];
                    for (int x = 0; x < m; ++x) g += hmu[(i * m + b) * m + x] * grad_y(x, l, k);
                    v.g[l] = g;
                }
                a[i * m + b] = v;
                for (int ch = 0; ch < d; ++ch) {
                    Dual w(dsig[(ch * m + i) * m + b]);
                    for (int l = 0; l < q; ++l) {
                        double g = tsig[((l * d + ch) * m + i) * m + b];
                        for (int x = 0; x < m; ++x) g += hsig[((ch * m + i) * m + b) * m + x] * grad_y(x, l, k);
                        w.g[l] = g;
                    }
                    bch[ch][i * m + b] = w;
                }
            }
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < m; ++i) {
                Dual v(sig[j * m + i]);
                for (int l = 0; l < q; ++l) {
                    double g = gsig[(l * d + j) * m + i];
                    for (int x = 0; x < m; ++x) g += dsig[(j * m + i) * m + x] * grad_y(x, l, k);
                    v.g[l] = g;
                }
                sd[j * m + i] = v;
            }
        for (int ch = 0; ch < d; ++ch) db[ch] = fbm.increment(ch, k);
        auto dval = [&](int i, int j, int c, int kk) {
            Dual v(d1(i, j, c, kk));
            for (int l = 0; l < q; ++l) v.g[l] = grad_d1[l](i, j, c, kk);
            return v;
        };
        auto p = boundary_term<Dual>(k, m, d, sd, dval, r);
        e = eta_step<Dual>(e, a, bch, db, p, fbm.grid.dt(), m);
        for (int l = 0; l < q; ++l) {
            Eigen::MatrixXd g(m, m);
            for (int i = 0; i < m; ++i)
                for (int b = 0; b < m; ++b) g(i, b) = e[i * m + b].g[l];
            out[l][k + 1] = g;
        }
    }
    return out;
}

}  // namespace fdemle
