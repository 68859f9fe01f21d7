#include "fdemle/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fdemle/errors.hpp"
#include "fdemle/random.hpp"

namespace fdemle {

namespace {

class AffineDrift final : public DriftFunction {
public:
    AffineDrift(int m, std::vector<double> a0, std::vector<std::vector<double>> a, std::vector<double> b0,
                std::vector<std::vector<double>> b)
        : m_(m), a0_(std::move(a0)), a_(std::move(a)), b0_(std::move(b0)), b_(std::move(b)) {
        const std::size_t mm = static_cast<std::size_t>(m) * m;
        if (a0_.empty()) a0_.assign(mm, 0.0);
        if (b0_.empty()) b0_.assign(m, 0.0);
        if (b_.empty()) b_.assign(a_.size(), std::vector<double>(m, 0.0));
        if (a_.empty()) a_.assign(b_.size(), std::vector<double>(mm, 0.0));
        if (a0_.size() != mm || b0_.size() != static_cast<std::size_t>(m) || a_.size() != b_.size())
            throw ConfigError("affine drift tables have inconsistent sizes");
        for (auto& al : a_) {
            if (al.empty()) al.assign(mm, 0.0);
            if (al.size() != mm) throw ConfigError("affine drift matrix has wrong size");
        }
        for (auto& bl : b_) {
            if (bl.empty()) bl.assign(m, 0.0);
            if (bl.size() != static_cast<std::size_t>(m)) throw ConfigError("affine drift offset has wrong size");
        }
    }
    int state_dim() const override { return m_; }
    int param_dim() const override { return static_cast<int>(a_.size()); }

    void matrix(const double* theta, double* out) const {
        std::copy(a0_.begin(), a0_.end(), out);
        for (std::size_t l = 0; l < a_.size(); ++l)
            for (std::size_t e = 0; e < a0_.size(); ++e) out[e] += theta[l] * a_[l][e];
    }
    void value(const double* y, const double* theta, double* out) const override {
        for (int i = 0; i < m_; ++i) {
            double s = b0_[i];
            for (std::size_t l = 0; l < b_.size(); ++l) s += theta[l] * b_[l][i];
            for (int k = 0; k < m_; ++k) {
                double a = a0_[i * m_ + k];
                for (std::size_t l = 0; l < a_.size(); ++l) a += theta[l] * a_[l][i * m_ + k];
                s += a * y[k];
            }
            out[i] = s;
        }
    }
    void jacobian(const double*, const double* theta, double* out) const override { matrix(theta, out); }
    void hessian(const double*, const double*, double* out) const override {
        std::fill(out, out + m_ * m_ * m_, 0.0);
    }
    void theta_grad(const double* y, const double*, double* out) const override {
        for (std::size_t l = 0; l < a_.size(); ++l)
            for (int i = 0; i < m_; ++i) {
                double s = b_[l][i];
                for (int k = 0; k < m_; ++k) s += a_[l][i * m_ + k] * y[k];
                out[l * m_ + i] = s;
            }
    }
    void theta_jacobian(const double*, const double*, double* out) const override {
        for (std::size_t l = 0; l < a_.size(); ++l)
            std::copy(a_[l].begin(), a_[l].end(), out + l * m_ * m_);
    }

private:
    int m_;
    std::vector<double> a0_;
    std::vector<std::vector<double>> a_;
    std::vector<double> b0_;
    std::vector<std::vector<double>> b_;
};

class AffineDiffusion final : public DiffusionFunction {
public:
    AffineDiffusion(int m, int d, std::vector<double> s0, std::vector<std::vector<double>> s)
        : m_(m), d_(d), s0_(std::move(s0)), s_(std::move(s)) {
        const std::size_t md = static_cast<std::size_t>(m) * d;
        if (s0_.empty()) s0_.assign(md, 0.0);
        if (s0_.size() != md) throw ConfigError("affine diffusion matrix has wrong size");
        for (auto& sl : s_) {
            if (sl.empty()) sl.assign(md, 0.0);
            if (sl.size() != md) throw ConfigError("affine diffusion matrix has wrong size");
        }
    }
    int state_dim() const override { return m_; }
    int noise_dim() const override { return d_; }
    int param_dim() const override { return static_cast<int>(s_.size()); }

    void value(const double*, const double* theta, double* out) const override {
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < d_; ++j) {
                double v = s0_[i * d_ + j];
                for (std::size_t l = 0; l < s_.size(); ++l) v += theta[l] * s_[l][i * d_ + j];
                out[j * m_ + i] = v;
            }
    }
    void jacobian(const double*, const double*, double* out) const override {
        std::fill(out, out + d_ * m_ * m_, 0.0);
    }
    void hessian(const double*, const double*, double* out) const override {
        std::fill(out, out + d_ * m_ * m_ * m_, 0.0);
    }
    void theta_grad(const double*, const double*, double* out) const override {
        for (std::size_t l = 0; l < s_.size(); ++l)
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < d_; ++j) out[(l * d_ + j) * m_ + i] = s_[l][i * d_ + j];
    }
    void theta_jacobian(const double*, const double*, double* out) const override {
        std::fill(out, out + s_.size() * d_ * m_ * m_, 0.0);
    }

private:
    int m_, d_;
    std::vector<double> s0_;
    std::vector<std::vector<double>> s_;
};

class SineDrift final : public DriftFunction {
public:
    SineDrift(int q, int p) : q_(q), p_(p) {
        if (p < 0 || p >= q) throw ConfigError("sine drift parameter index out of range");
    }
    int state_dim() const override { return 1; }
    int param_dim() const override { return q_; }
    void value(const double* y, const double* th, double* out) const override { out[0] = th[p_] * std::sin(y[0]); }
    void jacobian(const double* y, const double* th, double* out) const override { out[0] = th[p_] * std::cos(y[0]); }
    void hessian(const double* y, const double* th, double* out) const override { out[0] = -th[p_] * std::sin(y[0]); }
    void theta_grad(const double* y, const double*, double* out) const override {
        for (int l = 0; l < q_; ++l) out[l] = l == p_ ? std::sin(y[0]) : 0.0;
    }
    void theta_jacobian(const double* y, const double*, double* out) const override {
        for (int l = 0; l < q_; ++l) out[l] = l == p_ ? std::cos(y[0]) : 0.0;
    }

private:
    int q_, p_;
};

class CosineDiffusion final : public DiffusionFunction {
public:
    CosineDiffusion(int q, int p, double kappa) : q_(q), p_(p), kappa_(kappa) {
        if (p < 0 || p >= q) throw ConfigError("cosine diffusion parameter index out of range");
        if (!(std::abs(kappa) < 1.0)) throw ConfigError("cosine diffusion needs |kappa| < 1");
    }
    int state_dim() const override { return 1; }
    int noise_dim() const override { return 1; }
    int param_dim() const override { return q_; }
    void value(const double* y, const double* th, double* out) const override {
        out[0] = th[p_] * (1.0 + kappa_ * std::cos(y[0]));
    }
    void jacobian(const double* y, const double* th, double* out) const override {
        out[0] = -th[p_] * kappa_ * std::sin(y[0]);
    }
    void hessian(const double* y, const double* th, double* out) const override {
        out[0] = -th[p_] * kappa_ * std::cos(y[0]);
    }
    void theta_grad(const double* y, const double*, double* out) const override {
        for (int l = 0; l < q_; ++l) out[l] = l == p_ ? 1.0 + kappa_ * std::cos(y[0]) : 0.0;
    }
    void theta_jacobian(const double* y, const double*, double* out) const override {
        for (int l = 0; l < q_; ++l) out[l] = l == p_ ? -kappa_ * std::sin(y[0]) : 0.0;
    }

private:
    int q_, p_;
    double kappa_;
};

}  // namespace

std::vector<std::pair<double, double>> ModelSpec::box() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : params) out.emplace_back(p.lower, p.upper);
    return out;
}

void check_theta(const ModelSpec& model, std::span<const double> theta) {
    if (theta.size() != static_cast<std::size_t>(model.q())) {
        std::ostringstream os;
        os << "model " << model.name << " expects " << model.q() << " parameters, got " << theta.size();
        throw ArgumentError(os.str());
    }
    for (int l = 0; l < model.q(); ++l) {
        const auto& p = model.params[l];
        if (!std::isfinite(theta[l]) || theta[l] < p.lower || theta[l] > p.upper) {
            std::ostringstream os;
            os << "parameter " << p.name << " = " << theta[l] << " outside [" << p.lower << ", " << p.upper << "]";
            throw ArgumentError(os.str());
        }
    }
}

FlagProbe probe_flags(const ModelSpec& model, std::span<const double> theta, int points, double radius) {
    const int m = model.m, d = model.d;
    std::vector<double> y(m), hess(static_cast<std::size_t>(m) * m * m), djac(static_cast<std::size_t>(d) * m * m),
        sig(static_cast<std::size_t>(d) * m);
    NormalStream rng(0x5eed);
    FlagProbe out{true, true, std::numeric_limits<double>::infinity()};
    for (int p = 0; p < points; ++p) {
        for (double& v : y) v = radius * std::tanh(rng.next());
        model.drift->hessian(y.data(), theta.data(), hess.data());
        model.diffusion->jacobian(y.data(), theta.data(), djac.data());
        model.diffusion->value(y.data(), theta.data(), sig.data());
        if (std::any_of(hess.begin(), hess.end(), [](double v) { return v != 0.0; })) out.linear_drift = false;
        if (std::any_of(djac.begin(), djac.end(), [](double v) { return v != 0.0; })) out.additive_noise = false;
        Eigen::Map<const Eigen::MatrixXd> s(sig.data(), m, d);
        Eigen::MatrixXd a = s * s.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        out.min_ellipticity = std::min(out.min_ellipticity, es.eigenvalues().minCoeff());
    }
    return out;
}

void finalize_model(ModelSpec& model) {
    if (model.m < 1 || model.d < 1) throw ConfigError("model dimensions must be positive");
    if (!model.drift || !model.diffusion) throw ConfigError("model needs drift and diffusion functions");
    if (model.params.empty()) throw ConfigError("model needs at least one parameter");
    if (model.drift->state_dim() != model.m || model.diffusion->state_dim() != model.m ||
        model.diffusion->noise_dim() != model.d || model.drift->param_dim() != model.q() ||
        model.diffusion->param_dim() != model.q())
        throw ConfigError("model " + model.name + " has inconsistent coefficient dimensions");
    if (model.initial.size() != static_cast<std::size_t>(model.m))
        throw ConfigError("model initial value has wrong dimension");
    Theta mid;
    for (const auto& p : model.params) {
        if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper))
            throw ConfigError("parameter " + p.name + " needs a finite box lower < upper");
        mid.push_back(0.5 * (p.lower + p.upper));
    }
    auto flags = probe_flags(model, mid);
    for (double f : {0.23, 0.61, 0.87}) {
        Theta t;
        for (std::size_t l = 0; l < model.params.size(); ++l) {
            const auto& p = model.params[l];
            const double u = std::fmod(f + 0.37 * static_cast<double>(l), 1.0);
            t.push_back(p.lower + u * (p.upper - p.lower));
        }
        auto extra = probe_flags(model, t);
        flags.linear_drift = flags.linear_drift && extra.linear_drift;
        flags.additive_noise = flags.additive_noise && extra.additive_noise;
    }
    model.linear_drift = flags.linear_drift;
    model.additive_noise = flags.additive_noise;
}

std::shared_ptr<const DriftFunction> make_affine_drift(int m, std::vector<double> a0,
                                                       std::vector<std::vector<double>> a, std::vector<double> b0,
                                                       std::vector<std::vector<double>> b) {
    return std::make_shared<AffineDrift>(m, std::move(a0), std::move(a), std::move(b0), std::move(b));
}

std::shared_ptr<const DiffusionFunction> make_affine_diffusion(int m, int d, std::vector<double> s0,
                                                               std::vector<std::vector<double>> s) {
    return std::make_shared<AffineDiffusion>(m, d, std::move(s0), std::move(s));
}

std::shared_ptr<const DriftFunction> make_sine_drift(int q, int p) { return std::make_shared<SineDrift>(q, p); }

std::shared_ptr<const DiffusionFunction> make_cosine_diffusion(int q, int p, double kappa) {
    return std::make_shared<CosineDiffusion>(q, p, kappa);
}

}  // namespace fdemle
