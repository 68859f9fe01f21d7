#include "fdemle/models.hpp"

#include "fdemle/errors.hpp"
#include "fdemle/fbm.hpp"
#include "fdemle/pathwise.hpp"

namespace fdemle {

std::vector<std::string> builtin_model_names() { return {"fou", "linear2d", "findrift", "sine1d"}; }

ModelSpec get_model(const std::string& name) {
    ModelSpec s;
    s.name = name;
    if (name == "fou") {
        // dY = -λ Y dt + dB
        s.m = s.d = 1;
        s.params = {{"lambda", 0.01, 10.0}};
        s.initial = {0.0};
        s.drift = make_affine_drift(1, {0.0}, {{-1.0}}, {}, {});
        s.diffusion = make_affine_diffusion(1, 1, {1.0}, {{0.0}});
    } else if (name == "linear2d") {
        // dY1 = -α Y2 dt + β dB1, dY2 = -β Y1 dt + β dB2
        s.m = s.d = 2;
        s.params = {{"alpha", 0.1, 10.0}, {"beta", 0.1, 10.0}};
        s.initial = {1.0, 1.0};
        s.drift = make_affine_drift(2, {}, {{0.0, -1.0, 0.0, 0.0}, {0.0, 0.0, -1.0, 0.0}}, {}, {});
        s.diffusion = make_affine_diffusion(2, 2, {0.0, 0.0, 0.0, 0.0}, {{0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}});
    } else if (name == "findrift") {
        // dS = μ S dt + σ dB
        s.m = s.d = 1;
        s.params = {{"mu", -1.0, 1.0}, {"sigma", 0.01, 10.0}};
        s.initial = {100.0};
        s.drift = make_affine_drift(1, {0.0}, {{1.0}, {0.0}}, {}, {});
        s.diffusion = make_affine_diffusion(1, 1, {0.0}, {{0.0}, {1.0}});
    } else if (name == "sine1d") {
        // dY = θ0 sin(Y) dt + θ1 (1 + 0.3 cos Y) dB
        s.m = s.d = 1;
        s.params = {{"theta0", -2.0, 2.0}, {"theta1", 0.1, 5.0}};
        s.initial = {0.5};
        s.drift = make_sine_drift(2, 0);
        s.diffusion = make_cosine_diffusion(2, 1, 0.3);
    } else {
        std::string names;
        for (const auto& n : builtin_model_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown model '" + name + "' (built-ins: " + names + ")");
    }
    finalize_model(s);
    return s;
}

ModelSpec build_user_model(const UserModelDescription& u) {
    ModelSpec s;
    s.name = u.name;
    s.m = u.m;
    s.d = u.d;
    s.params = u.params;
    s.initial = u.initial;
    const int q = static_cast<int>(u.params.size());
    if (u.drift_family == "affine") {
        auto a = u.drift_a, b = u.drift_b;
        if (a.empty() && b.empty()) a.assign(q, {});
        s.drift = make_affine_drift(u.m, u.drift_a0, a, u.drift_b0, b);
    } else if (u.drift_family == "sine") {
        if (u.m != 1) throw ConfigError("sine drift is scalar");
        if (u.sine_param < 0 || u.sine_param >= q) throw ConfigError("sine drift parameter index out of range");
        s.drift = make_sine_drift(q, u.sine_param);
    } else {
        throw ConfigError("unknown drift family '" + u.drift_family + "' (affine, sine)");
    }
    if (u.diffusion_family == "affine") {
        auto sl = u.diffusion_s;
        if (sl.empty()) sl.assign(q, {});
        for (auto& e : sl)
            if (e.empty()) e.assign(static_cast<std::size_t>(u.m) * u.d, 0.0);
        s.diffusion = make_affine_diffusion(u.m, u.d, u.diffusion_s0, sl);
    } else if (u.diffusion_family == "cosine") {
        if (u.m != 1 || u.d != 1) throw ConfigError("cosine diffusion is scalar");
        if (u.cosine_param < 0 || u.cosine_param >= q) throw ConfigError("cosine diffusion parameter index out of range");
        s.diffusion = make_cosine_diffusion(q, u.cosine_param, u.cosine_kappa);
    } else {
        throw ConfigError("unknown diffusion family '" + u.diffusion_family + "' (affine, cosine)");
    }
    finalize_model(s);
    return s;
}

Observations simulate_observations(const ModelSpec& model, std::span<const double> theta, double hurst, int n,
                                   double spacing, int steps, std::uint64_t seed, std::span<const double> initial) {
    if (n < 1 || steps < 1 || !(spacing > 0.0)) throw ArgumentError("simulation needs n >= 1, steps >= 1, spacing > 0");
    check_theta(model, theta);
    std::span<const double> a = initial.empty() ? std::span<const double>(model.initial) : initial;
    TimeGrid grid(n * spacing, n * steps);
    auto fbm = simulate_fbm(grid, model.d, HurstParam(hurst), seed);
    auto y = euler_solve(model, theta, fbm, a);
    Observations obs;
    obs.m = model.m;
    obs.initial.assign(a.begin(), a.end());
    for (int i = 1; i <= n; ++i) {
        obs.times.push_back(i * spacing);
        auto st = y.state(i * steps);
        obs.values.insert(obs.values.end(), st.begin(), st.end());
    }
    return obs;
}

}  // namespace fdemle
