#include "fdemle/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "fdemle/errors.hpp"
#include "fdemle/malliavin.hpp"
#include "fdemle/parallel.hpp"
#include "fdemle/pathwise.hpp"
#include "fdemle/random.hpp"
#include "fdemle/weights.hpp"

namespace fdemle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> ones(int m) {
    std::vector<int> t(m);
    std::iota(t.begin(), t.end(), 1);
    return t;
}

std::vector<int> twice(int m) {
    auto t = ones(m);
    auto u = t;
    t.insert(t.end(), u.begin(), u.end());
    return t;
}

double mean_of(std::span<const double> x) { return x.empty() ? kNaN : pairwise_sum(x) / x.size(); }

// Sample covariance in fixed summation order; NaN for fewer than two samples.
double cov_of(std::span<const double> x, double mx, std::span<const double> y, double my) {
    if (x.size() < 2) return kNaN;
    std::vector<double> t(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) t[s] = (x[s] - mx) * (y[s] - my);
    return pairwise_sum(t) / (x.size() - 1);
}

}  // namespace

void validate_observations(const Observations& obs) {
    if (obs.m < 1) throw ArgumentError("observations need a positive dimension");
    if (obs.times.empty()) throw ArgumentError("at least one observation is required");
    if (obs.initial.size() != static_cast<std::size_t>(obs.m)) throw ArgumentError("initial state has wrong dimension");
    if (obs.values.size() != obs.times.size() * obs.m) throw ArgumentError("observation values have wrong size");
    double prev = obs.t0;
    for (std::size_t i = 0; i < obs.times.size(); ++i) {
        if (!(obs.times[i] > prev)) throw ArgumentError("observation times must be strictly increasing");
        prev = obs.times[i];
    }
    for (double v : obs.values)
        if (!std::isfinite(v)) throw ArgumentError("observation values must be finite");
}

void SampleSet::append(const SampleSet& o) {
    if (o.m != m || o.q != q || o.has_v != has_v) throw ArgumentError("sample sets are incompatible");
    count += o.count;
    y.insert(y.end(), o.y.begin(), o.y.end());
    gy.insert(gy.end(), o.gy.begin(), o.gy.end());
    hw.insert(hw.end(), o.hw.begin(), o.hw.end());
    hv.insert(hv.end(), o.hv.begin(), o.hv.end());
    ghv.insert(ghv.end(), o.ghv.begin(), o.ghv.end());
}

std::vector<int> choose_sides(const SampleSet& s, std::span<const double> x, bool tail_side) {
    std::vector<int> side(s.m, 1);
    if (!tail_side) return side;
    std::vector<double> col(s.count);
    for (int k = 0; k < s.m; ++k) {
        for (int p = 0; p < s.count; ++p) col[p] = s.y[static_cast<std::size_t>(p) * s.m + k];
        if (x[k] < mean_of(col)) side[k] = -1;
    }
    return side;
}

namespace {

// Π_k ind_k, with ind = 1{y>x} on the right and -1{y<=x} on the left.
double indicator(const double* y, std::span<const double> x, std::span<const int> side) {
    double v = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (side[k] > 0) v *= y[k] > x[k] ? 1.0 : 0.0;
        else v *= y[k] <= x[k] ? -1.0 : 0.0;
    }
    return v;
}

}  // namespace

Estimate w_from_samples(const SampleSet& s, std::span<const double> x, std::span<const int> side) {
    if (x.size() != static_cast<std::size_t>(s.m)) throw ArgumentError("threshold has wrong dimension");
    std::vector<double> w(s.count);
    for (int p = 0; p < s.count; ++p) w[p] = indicator(s.y.data() + static_cast<std::size_t>(p) * s.m, x, side) * s.hw[p];
    Estimate e;
    e.paths = s.count;
    e.value = mean_of(w);
    e.se = s.count < 2 ? kNaN : std::sqrt(cov_of(w, e.value, w, e.value) / s.count);
    return e;
}

ObservationScore score_from_samples(const SampleSet& s, std::span<const double> x, std::span<const int> side) {
    if (!s.has_v) throw ArgumentError("samples lack the V weights");
    const int m = s.m, q = s.q, n = s.count;
    std::vector<double> w(n), v(static_cast<std::size_t>(q) * n);
    std::vector<double> phi(m), psi(m);
    for (int p = 0; p < n; ++p) {
        const double* y = s.y.data() + static_cast<std::size_t>(p) * m;
        w[p] = indicator(y, x, side) * s.hw[p];
        double prod = 1.0;
        for (int k = 0; k < m; ++k) {
            if (side[k] > 0) {
                phi[k] = y[k] > x[k] ? 1.0 : 0.0;
                psi[k] = std::max(y[k] - x[k], 0.0);
            } else {
                phi[k] = y[k] < x[k] ? -1.0 : 0.0;
                psi[k] = std::max(x[k] - y[k], 0.0);
            }
            prod *= psi[k];
        }
        for (int l = 0; l < q; ++l) {
            const double* g = s.gy.data() + (static_cast<std::size_t>(p) * q + l) * m;
            double first = 0.0;
            for (int i = 0; i < m; ++i) {
                double t = phi[i] * g[i];
                for (int k = 0; k < m; ++k)
                    if (k != i) t *= psi[k];
                first += t;
            }
            v[static_cast<std::size_t>(l) * n + p] = first * s.hv[p] + prod * s.ghv[static_cast<std::size_t>(p) * q + l];
        }
    }
    ObservationScore o;
    o.paths = n;
    o.side.assign(side.begin(), side.end());
    o.w = mean_of(w);
    double var_w = cov_of(w, o.w, w, o.w);
    o.w_se = n < 2 ? kNaN : std::sqrt(var_w / n);
    for (int l = 0; l < q; ++l) {
        std::span<const double> vl(v.data() + static_cast<std::size_t>(l) * n, n);
        double mv = mean_of(vl);
        double var_v = cov_of(vl, mv, vl, mv);
        double cvw = cov_of(vl, mv, w, o.w);
        double r = mv / o.w;
        o.v.push_back(mv);
        o.v_se.push_back(n < 2 ? kNaN : std::sqrt(var_v / n));
        o.ratio.push_back(r);
        o.ratio_var.push_back(n < 2 ? kNaN : (var_v - 2.0 * r * cvw + r * r * var_w) / (n * o.w * o.w));
    }
    return o;
}

struct ScoreEngine::Bank {
    int cells = 0;
    int count = 0;
    std::vector<double> data;  // path-major
};

ScoreEngine::ScoreEngine(ModelSpec model, Observations obs, LikelihoodConfig config)
    : model_(std::move(model)), obs_(std::move(obs)), config_(config), base_seed_(config.seed) {
    validate_observations(obs_);
    if (obs_.m != model_.m) throw ArgumentError("observation dimension differs from the model state dimension");
    HurstParam h(config_.hurst);
    (void)h;
    if (config_.steps < 2) throw ArgumentError("at least two Euler steps per interval are required");
    if (config_.paths < 1) throw ArgumentError("at least one Monte-Carlo path is required");
    if (config_.max_paths <= 0) config_.max_paths = 32 * config_.paths;
    if (config_.max_paths < config_.paths) throw ArgumentError("max_paths must not be below paths");
    polynomial_ = config_.route == SamplerRoute::polynomial ||
                  (config_.route == SamplerRoute::automatic && model_.linear_additive());
    if (polynomial_ && !model_.linear_additive())
        throw CapabilityError("the polynomial route needs a linear-drift additive-noise model");

    const int n = obs_.size();
    if (config_.mode == LikelihoodMode::transition) {
        for (int i = 0; i < n; ++i) {
            auto prev = obs_.previous(i);
            problems_.push_back({TimeGrid(obs_.times[i] - obs_.previous_time(i), config_.steps), config_.steps,
                                 std::vector<double>(prev.begin(), prev.end()), static_cast<std::uint64_t>(i)});
        }
    } else {
        const double span = obs_.times.back() - obs_.t0;
        for (int i = 0; i < n; ++i) {
            double expected = obs_.t0 + span * (i + 1) / n;
            if (std::abs(obs_.times[i] - expected) > 1e-9 * std::max(1.0, span))
                throw ConfigError("marginal mode requires equally spaced observation times");
        }
        if (static_cast<long long>(n) * config_.steps > config_.marginal_max_steps)
            throw ConfigError("marginal mode grid exceeds marginal_max_steps; reduce steps or observations");
        TimeGrid grid(span, n * config_.steps);
        for (int i = 0; i < n; ++i) problems_.push_back({grid, (i + 1) * config_.steps, obs_.initial, 0});
    }
    paths_.assign(n, config_.paths);
}

ScoreEngine::~ScoreEngine() = default;

void ScoreEngine::reseed(int attempt) {
    base_seed_ = attempt == 0 ? config_.seed : stream_seed(config_.seed, 0x5eedULL, static_cast<std::uint64_t>(attempt));
    banks_.clear();
    bank_bytes_ = 0;
}

const DaviesHarte& ScoreEngine::sampler(const TimeGrid& grid) {
    std::lock_guard<std::mutex> lock(sampler_mutex_);
    auto key = std::make_pair(grid.horizon, grid.steps);
    auto it = samplers_.find(key);
    if (it == samplers_.end())
        it = samplers_.emplace(key, std::make_unique<DaviesHarte>(grid, HurstParam(config_.hurst))).first;
    return *it->second;
}

std::vector<double> ScoreEngine::draw(const Problem& p, int path) const {
    auto it = samplers_.find(std::make_pair(p.grid.horizon, p.grid.steps));
    std::vector<double> out(static_cast<std::size_t>(model_.d) * p.grid.steps);
    it->second->sample(stream_seed(base_seed_, p.stream, static_cast<std::uint64_t>(path)), model_.d, out);
    return out;
}

const ScoreEngine::Bank& ScoreEngine::bank(const Problem& p, int count) {
    auto& slot = banks_[p.stream];
    if (!slot) {
        slot = std::make_unique<Bank>();
        slot->cells = model_.d * p.grid.steps;
    }
    Bank& b = *slot;
    if (b.count < count) {
        const int old = b.count;
        b.data.resize(static_cast<std::size_t>(count) * b.cells);
        parallel_for(count - old, config_.workers, [&](std::size_t s) {
            auto v = draw(p, old + static_cast<int>(s));
            std::copy(v.begin(), v.end(), b.data.begin() + static_cast<std::ptrdiff_t>(old + s) * b.cells);
        });
        bank_bytes_ += static_cast<std::size_t>(count - old) * b.cells * sizeof(double);
        b.count = count;
    }
    return b;
}

const LinearKernel& ScoreEngine::kernel(std::span<const double> theta, const Problem& p) {
    if (kernel_theta_.size() != theta.size() || !std::equal(theta.begin(), theta.end(), kernel_theta_.begin())) {
        kernels_.clear();
        kernel_theta_.assign(theta.begin(), theta.end());
    }
    auto key = std::make_pair(p.grid.horizon, std::make_pair(p.grid.steps, p.target));
    auto it = kernels_.find(key);
    if (it == kernels_.end())
        it = kernels_.emplace(key, linear_kernel(model_, theta, p.grid, HurstParam(config_.hurst), p.target)).first;
    return it->second;
}

SampleSet ScoreEngine::sample(std::span<const double> theta, int i, int first, int count, bool need_v) {
    const Problem& p = problems_[i];
    const int m = model_.m, d = model_.d, q = model_.q();
    const int cells = d * p.grid.steps;
    sampler(p.grid);

    SampleSet s;
    s.m = m;
    s.q = q;
    s.count = count;
    s.has_v = need_v;
    s.y.assign(static_cast<std::size_t>(count) * m, 0.0);
    s.gy.assign(static_cast<std::size_t>(count) * q * m, 0.0);
    s.hw.assign(count, 0.0);
    if (need_v) {
        s.hv.assign(count, 0.0);
        s.ghv.assign(static_cast<std::size_t>(count) * q, 0.0);
    }

    const std::size_t needed = static_cast<std::size_t>(first + count) * cells * sizeof(double);
    auto found = banks_.find(p.stream);
    const std::size_t have = found != banks_.end() ? static_cast<std::size_t>(found->second->count) * cells * sizeof(double) : 0;
    const Bank* bk = nullptr;
    if (bank_bytes_ + (needed > have ? needed - have : 0) <= config_.cache_bytes) bk = &bank(p, first + count);
    auto noise = [&](int path, std::vector<double>& scratch) -> const double* {
        if (bk) return bk->data.data() + static_cast<std::size_t>(path) * cells;
        scratch = draw(p, path);
        return scratch.data();
    };

    if (polynomial_) {
        const LinearKernel& k = kernel(theta, p);
        auto mean = linear_mean(model_, theta, p.grid, p.start, p.target);
        auto pw = chaos_weight(ones(m), k.gram, m);
        std::optional<ChaosPolynomial> pv;
        if (need_v) pv = chaos_weight(twice(m), k.gram, m);
        // Row r < m: D Y^r; row m + l*m + i: ∇_l D Y^i.
        const int nrows = m * (1 + q);
        Eigen::Matrix<double, -1, -1, Eigen::RowMajor> rows(nrows, cells);
        for (int i = 0; i < m; ++i)
            for (int u = 0; u < cells; ++u) {
                const Dual& v = k.rows[static_cast<std::size_t>(i) * cells + u];
                rows(i, u) = v.v;
                for (int l = 0; l < q; ++l) rows(m + l * m + i, u) = v.g[l];
            }
        parallel_for(count, config_.workers, [&](std::size_t idx) {
            const int path = first + static_cast<int>(idx);
            std::vector<double> scratch;
            Eigen::Map<const Eigen::VectorXd> b(noise(path, scratch), cells);
            std::vector<Dual> z(m), x(m);
            for (int i = 0; i < m; ++i) {
                z[i] = Dual(rows.row(i).dot(b));
                for (int l = 0; l < q; ++l) z[i].g[l] = rows.row(m + l * m + i).dot(b);
            }
            for (int a = 0; a < m; ++a) {
                Dual v(0.0);
                for (int j = 0; j < m; ++j) v += k.eta[a * m + j] * z[j];
                x[a] = v;
            }
            for (int i = 0; i < m; ++i) {
                s.y[idx * m + i] = mean[i].v + z[i].v;
                for (int l = 0; l < q; ++l) s.gy[(idx * q + l) * m + i] = mean[i].g[l] + z[i].g[l];
            }
            s.hw[idx] = pw.evaluate(x).v;
            if (need_v) {
                Dual h = pv->evaluate(x);
                s.hv[idx] = h.v;
                for (int l = 0; l < q; ++l) s.ghv[idx * q + l] = h.g[l];
            }
        });
        return s;
    }

    if (need_v && !model_.linear_additive())
        throw CapabilityError("V needs weights of depth 2m, which require third Malliavin derivatives for this model");
    const HurstParam h(config_.hurst);
    parallel_for(count, config_.workers, [&](std::size_t idx) {
        const int path = first + static_cast<int>(idx);
        std::vector<double> scratch;
        const double* nz = noise(path, scratch);
        FbmPath fbm{p.grid, h, d, 0, std::vector<double>(nz, nz + cells)};
        auto y = euler_solve(model_, theta, fbm, p.start);
        auto gy = theta_gradient(model_, theta, fbm, y);
        for (int i = 0; i < m; ++i) {
            s.y[idx * m + i] = y.at(p.target, i);
            for (int l = 0; l < q; ++l) s.gy[(idx * q + l) * m + i] = gy(i, l, p.target);
        }
        if (need_v) {
            auto b = make_dual_bundle(model_, theta, fbm, p.start, p.target);
            s.hw[idx] = h_weight(ones(m), b).value.v;
            Dual hv = h_weight(twice(m), b).value;
            s.hv[idx] = hv.v;
            for (int l = 0; l < q; ++l) s.ghv[idx * q + l] = hv.g[l];
        } else {
            auto b = make_bundle(model_, theta, fbm, p.start, p.target);
            s.hw[idx] = h_weight(ones(m), b).value;
        }
    });
    return s;
}

SampleSet ScoreEngine::samples(std::span<const double> theta, int i, bool need_v) {
    check_theta(model_, theta);
    return sample(theta, i, 0, paths_[i], need_v);
}

Estimate ScoreEngine::W(std::span<const double> theta, int i) {
    auto s = samples(theta, i, false);
    auto side = choose_sides(s, obs_.value(i), config_.tail_side);
    return w_from_samples(s, obs_.value(i), side);
}

std::vector<Estimate> ScoreEngine::V(std::span<const double> theta, int i) {
    auto s = samples(theta, i, true);
    auto side = choose_sides(s, obs_.value(i), config_.tail_side);
    auto o = score_from_samples(s, obs_.value(i), side);
    std::vector<Estimate> out;
    for (int l = 0; l < model_.q(); ++l) out.push_back({o.v[l], o.v_se[l], o.paths});
    return out;
}

ScoreValue ScoreEngine::score(std::span<const double> theta) {
    check_theta(model_, theta);
    const int q = model_.q();
    ScoreValue out;
    out.score.assign(q, 0.0);
    std::vector<double> var(q, 0.0);
    auto reliable = [&](const ObservationScore& o) {
        return std::isfinite(o.w) && o.w > config_.w_floor && std::isfinite(o.w_se) && o.w > config_.w_se_factor * o.w_se;
    };
    for (int i = 0; i < obs_.size(); ++i) {
        int n = paths_[i];
        auto s = sample(theta, i, 0, n, true);
        auto x = obs_.value(i);
        auto side = choose_sides(s, x, config_.tail_side);
        auto o = score_from_samples(s, x, side);
        while (!reliable(o)) {
            if (2 * n > config_.max_paths)
                throw UnreliableScoreError("W estimate for observation " + std::to_string(i) +
                                               " is not bounded away from zero (W=" + std::to_string(o.w) +
                                               ", SE=" + std::to_string(o.w_se) + ")",
                                           i);
            s.append(sample(theta, i, n, n, true));
            n *= 2;
            paths_[i] = n;
            o = score_from_samples(s, x, side);
        }
        for (int l = 0; l < q; ++l) {
            out.score[l] += o.ratio[l];
            var[l] += o.ratio_var[l];
        }
        out.observations.push_back(std::move(o));
    }
    for (int l = 0; l < q; ++l) out.score_se.push_back(std::sqrt(var[l]));
    return out;
}

namespace {

Observations single(const ModelSpec& model, double t, std::span<const double> x) {
    Observations o;
    o.m = model.m;
    o.initial = model.initial;
    o.times = {t};
    o.values.assign(x.begin(), x.end());
    return o;
}

LikelihoodConfig single_config(LikelihoodConfig c) {
    c.mode = LikelihoodMode::transition;
    return c;
}

}  // namespace

Estimate estimate_density(const ModelSpec& model, std::span<const double> theta, double t, std::span<const double> x,
                          const LikelihoodConfig& config) {
    ScoreEngine e(model, single(model, t, x), single_config(config));
    return e.W(theta, 0);
}

std::vector<Estimate> estimate_density_curve(const ModelSpec& model, std::span<const double> theta, double t,
                                             const std::vector<std::vector<double>>& xs,
                                             const LikelihoodConfig& config) {
    if (xs.empty()) return {};
    ScoreEngine e(model, single(model, t, xs.front()), single_config(config));
    auto s = e.samples(theta, 0, false);
    std::vector<Estimate> out;
    for (const auto& x : xs) {
        if (x.size() != static_cast<std::size_t>(model.m)) throw ArgumentError("threshold has wrong dimension");
        out.push_back(w_from_samples(s, x, choose_sides(s, x, config.tail_side)));
    }
    return out;
}

Estimate estimate_W(const ModelSpec& model, std::span<const double> theta, const Observations& obs, int i,
                    const LikelihoodConfig& config) {
    if (i < 0 || i >= obs.size()) throw ArgumentError("observation index out of range");
    ScoreEngine e(model, obs, config);
    return e.W(theta, i);
}

Estimate estimate_V(const ModelSpec& model, std::span<const double> theta, int l, const Observations& obs, int i,
                    const LikelihoodConfig& config) {
    if (i < 0 || i >= obs.size()) throw ArgumentError("observation index out of range");
    if (l < 0 || l >= model.q()) throw ArgumentError("parameter index out of range");
    ScoreEngine e(model, obs, config);
    return e.V(theta, i)[l];
}

ScoreValue score(const ModelSpec& model, std::span<const double> theta, const Observations& obs,
                 const LikelihoodConfig& config) {
    ScoreEngine e(model, obs, config);
    return e.score(theta);
}

BudgetAllocation allocate_budget(int steps, double gamma, double horizon, int m, int d, double c, long long n_max) {
    if (!(gamma > 0.5)) throw ArgumentError("the Hölder exponent must exceed 1/2");
    if (steps < 1 || horizon <= 0.0 || m < 1 || d < 1 || !(c > 0.0) || n_max < 1)
        throw ArgumentError("invalid budget inputs");
    BudgetAllocation out;
    const double gt = horizon * m * (d + 1);
    out.exponent = gt / (2.0 * gamma - 1.0) - 3.0;
    double n = c * std::pow(static_cast<double>(steps), out.exponent);
    const double near = std::round(n);
    if (std::abs(n - near) <= 1e-9 * std::max(1.0, std::abs(n))) n = near;
    n = std::max(1.0, std::ceil(n));
    if (!(n <= static_cast<double>(n_max))) {
        out.capped = true;
        out.warning = "requested " + std::to_string(n) + " paths; capped at " + std::to_string(n_max);
        out.paths = n_max;
    } else {
        out.paths = static_cast<long long>(n);
    }
    return out;
}

}  // namespace fdemle
