#include "fdemle/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fdemle/errors.hpp"

namespace fdemle {

double StepSchedule::step(int k) const { return a0 / std::pow(b + k + 1.0, rho); }

std::optional<std::string> validate_schedule(const StepSchedule& s) {
    if (!(s.a0 > 0.0)) return "a0 must be positive so that every a_k > 0";
    if (!(s.b >= 0.0)) return "offset b must be non-negative";
    if (!(s.rho > 0.5)) return "rho must exceed 1/2, otherwise the squared steps are not summable";
    if (!(s.rho <= 1.0)) return "rho must not exceed 1, otherwise the steps are summable";
    return std::nullopt;
}

namespace {

IterationFailure classify(int k, int attempt) {
    IterationFailure f{k, attempt, "numeric", "", -1};
    try {
        throw;
    } catch (const UnreliableScoreError& e) {
        f.kind = "unreliable";
        f.message = e.what();
        f.observation = e.observation();
    } catch (const CapabilityError& e) {
        f.kind = "capability";
        f.message = e.what();
    } catch (const NumericError& e) {
        f.message = e.what();
    }
    return f;
}

}  // namespace

EstimationReport robbins_monro(const ScoreFunction& g, std::span<const double> theta0, const StepSchedule& schedule,
                               const RobbinsMonroOptions& options) {
    if (auto bad = validate_schedule(schedule)) throw ArgumentError("invalid step schedule: " + *bad);
    if (options.iterations < 1) throw ArgumentError("at least one iteration is required");
    const std::size_t q = theta0.size();
    if (q == 0) throw ArgumentError("empty parameter vector");
    if (!options.box.empty() && options.box.size() != q) throw ArgumentError("projection box has wrong dimension");
    for (std::size_t l = 0; l < options.box.size(); ++l)
        if (!(theta0[l] >= options.box[l].first && theta0[l] <= options.box[l].second))
            throw ArgumentError("starting point lies outside the projection box");

    const auto start = std::chrono::steady_clock::now();
    EstimationReport rep;
    std::vector<double> theta(theta0.begin(), theta0.end());
    rep.trace.push_back(theta);
    int attempt = 0;
    for (int k = 0; k < options.iterations; ++k) {
        ScoreEval ev;
        bool ok = false;
        for (int tries = 0; tries < 2 && !ok; ++tries) {
            try {
                ev = g(theta, attempt);
                if (ev.g.size() != q) throw NumericError("score has wrong dimension");
                for (double v : ev.g)
                    if (!std::isfinite(v)) throw NumericError("score is not finite");
                ok = true;
            } catch (const CapabilityError&) {
                rep.failures.push_back(classify(k, attempt));
                break;
            } catch (const NumericError&) {
                rep.failures.push_back(classify(k, attempt));
                ++attempt;
            } catch (const UnreliableScoreError&) {
                rep.failures.push_back(classify(k, attempt));
                ++attempt;
            }
        }
        if (!ok) {
            rep.aborted = true;
            break;
        }
        rep.scores.push_back(ev.g);
        rep.score_se.push_back(ev.se);
        const double a = schedule.step(k);
        for (std::size_t l = 0; l < q; ++l) {
            theta[l] -= a * ev.g[l];
            if (!options.box.empty()) theta[l] = std::clamp(theta[l], options.box[l].first, options.box[l].second);
        }
        rep.trace.push_back(theta);
    }
    const int done = static_cast<int>(rep.trace.size()) - 1;
    rep.tail = std::max(1, (std::max(done, 1) + 4) / 5);
    rep.tail = std::min<int>(rep.tail, static_cast<int>(rep.trace.size()));
    rep.theta_hat.assign(q, 0.0);
    for (int s = static_cast<int>(rep.trace.size()) - rep.tail; s < static_cast<int>(rep.trace.size()); ++s)
        for (std::size_t l = 0; l < q; ++l) rep.theta_hat[l] += rep.trace[s][l] / rep.tail;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

EstimationReport estimate_parameters(const ModelSpec& model, const Observations& obs, std::span<const double> theta0,
                                     const StepSchedule& schedule, int iterations, const LikelihoodConfig& config) {
    check_theta(model, theta0);
    ScoreEngine engine(model, obs, config);
    int current = 0;
    ScoreFunction g = [&](std::span<const double> theta, int attempt) {
        if (attempt != current) {
            engine.reseed(attempt);
            current = attempt;
        }
        auto s = engine.score(theta);
        ScoreEval ev;
        for (double v : s.score) ev.g.push_back(-v);
        ev.se = s.score_se;
        return ev;
    };
    RobbinsMonroOptions opt;
    opt.iterations = iterations;
    opt.box = model.box();
    return robbins_monro(g, theta0, schedule, opt);
}

ReplicationSummary summarize(const std::vector<std::vector<double>>& est) {
    ReplicationSummary s;
    s.count = static_cast<int>(est.size());
    if (est.empty()) return s;
    const std::size_t q = est.front().size();
    s.mean.assign(q, 0.0);
    s.sd.assign(q, 0.0);
    s.se.assign(q, 0.0);
    for (const auto& e : est)
        for (std::size_t l = 0; l < q; ++l) s.mean[l] += e[l] / s.count;
    for (std::size_t l = 0; l < q; ++l) {
        if (s.count < 2) {
            s.sd[l] = s.se[l] = std::nan("");
            continue;
        }
        double v = 0.0;
        for (const auto& e : est) v += (e[l] - s.mean[l]) * (e[l] - s.mean[l]);
        s.sd[l] = std::sqrt(v / (s.count - 1));
        s.se[l] = s.sd[l] / std::sqrt(static_cast<double>(s.count));
    }
    return s;
}

}  // namespace fdemle
