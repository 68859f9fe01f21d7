#include "cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include <CLI11.hpp>

#include "cli/io.hpp"
#include "fdemle/errors.hpp"
#include "fdemle/parallel.hpp"
#include "fdemle/random.hpp"

namespace fdemle::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kMonteCarloStream = 2;

std::string out_path(const RunConfig& c, const std::string& name) {
    return (std::filesystem::path(c.output) / name).string();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
}

void write_meta(const RunConfig& c, const std::vector<std::string>& outputs) {
    json meta = {{"command", c.command},
                 {"config", to_json(c)},
                 {"config_hash", config_hash(c)},
                 {"seed", c.seed},
                 {"outputs", outputs}};
    write_atomic(out_path(c, c.command + ".meta.json"), meta.dump(2) + "\n");
}

void write_timing(const RunConfig& c, double seconds, const json& extra = json::object()) {
    json t = extra;
    t["command"] = c.command;
    t["seconds"] = seconds;
    t["workers"] = resolve_workers(c.workers);
    write_atomic(out_path(c, "timing.json"), t.dump(2) + "\n");
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelSpec boxed_model(const RunConfig& c) {
    ModelSpec model = resolve_model(c);
    for (std::size_t l = 0; l < c.box.size(); ++l) {
        model.params[l].lower = c.box[l].first;
        model.params[l].upper = c.box[l].second;
    }
    return model;
}

std::vector<std::string> param_names(const ModelSpec& m) {
    std::vector<std::string> n;
    for (const auto& p : m.params) n.push_back(p.name);
    return n;
}

int failure_code(const EstimationReport& r) {
    for (const auto& f : r.failures)
        if (f.kind == "unreliable") return kUnreliableScore;
    return kNumericError;
}

}  // namespace

std::uint64_t data_seed(const RunConfig& c, int replication) { return stream_seed(c.seed, kDataStream, replication); }

std::uint64_t monte_carlo_seed(const RunConfig& c, int replication) {
    return stream_seed(c.seed, kMonteCarloStream, replication);
}

SimulateRun run_simulate(const RunConfig& c, int replication) {
    const ModelSpec model = resolve_model(c);
    const std::uint64_t seed = data_seed(c, replication);
    SimulateRun s;
    s.obs = simulate_observations(model, c.theta, c.hurst, c.observations, c.spacing, c.steps, seed);
    std::string header = "t";
    for (int i = 1; i <= model.m; ++i) header += ",Y" + std::to_string(i);
    if (c.emit_fbm) {
        TimeGrid grid(c.observations * c.spacing, c.observations * c.steps);
        auto fbm = simulate_fbm(grid, model.d, HurstParam(c.hurst), seed);
        for (int j = 1; j <= model.d; ++j) {
            s.fbm_columns.push_back("B" + std::to_string(j));
            header += ",B" + std::to_string(j);
        }
        for (int i = 0; i <= c.observations; ++i) {
            std::vector<double> row;
            for (int j = 0; j < model.d; ++j) row.push_back(fbm.value(j, i * c.steps));
            s.fbm_values.push_back(row);
        }
    }
    s.csv = header + "\n";
    for (int i = 0; i <= c.observations; ++i) {
        std::vector<double> row{i == 0 ? s.obs.t0 : s.obs.times[i - 1]};
        auto y = i == 0 ? std::span<const double>(s.obs.initial) : s.obs.value(i - 1);
        row.insert(row.end(), y.begin(), y.end());
        if (c.emit_fbm) row.insert(row.end(), s.fbm_values[i].begin(), s.fbm_values[i].end());
        s.csv += csv_line(row);
    }
    return s;
}

EstimateRun run_estimate(const RunConfig& c) {
    EstimateRun run;
    run.model = boxed_model(c);
    std::optional<Observations> input;
    if (!c.input.empty()) input = observations_from_csv(read_csv(c.input), run.model.m);
    std::vector<std::vector<double>> finished;
    for (int r = 0; r < c.replications; ++r) {
        const Observations obs = input ? *input : run_simulate(c, r).obs;
        LikelihoodConfig lc = likelihood_config(c, run.model);
        lc.seed = monte_carlo_seed(c, r);
        run.paths = lc.paths;
        auto rep = estimate_parameters(run.model, obs, c.theta0, c.schedule, c.iterations, lc);
        if (rep.aborted) {
            ++run.aborted;
            const auto& f = rep.failures.back();
            std::fprintf(stderr, "replication %d aborted at iteration %d: %s\n", r, f.iteration, f.message.c_str());
            if (run.exit_code == kOk || failure_code(rep) == kUnreliableScore) run.exit_code = failure_code(rep);
        } else {
            finished.push_back(rep.theta_hat);
        }
        run.reports.push_back(std::move(rep));
    }
    run.summary = summarize(finished);
    return run;
}

HurstRun run_hurst(const RunConfig& c) {
    if (c.input.empty()) throw ConfigError("hurst needs an input CSV");
    const auto table = read_csv(c.input);
    auto series = table.column(c.column.empty() ? "Y1" : c.column);
    if (c.difference) {
        if (series.size() < 2) throw ArgumentError("differencing needs at least two values");
        for (std::size_t i = 0; i + 1 < series.size(); ++i) series[i] = series[i + 1] - series[i];
        series.pop_back();
    }
    HurstRun run;
    run.length = static_cast<int>(series.size());
    run.overall = estimate_hurst_rs(series);
    if (c.groups > 1) {
        const int n = run.length;
        for (int g = 0; g < c.groups; ++g) {
            const int a = static_cast<int>(static_cast<long long>(n) * g / c.groups);
            const int b = static_cast<int>(static_cast<long long>(n) * (g + 1) / c.groups);
            auto est = estimate_hurst_rs(std::span<const double>(series.data() + a, b - a));
            run.groups.push_back({a, b - a, est.h});
        }
    }
    return run;
}

RateStudy run_rate_study(const RunConfig& c) {
    if (c.user_model) throw ConfigError("rate-study runs on built-in models only");
    RateStudyOptions o = c.rate;
    o.hurst = c.hurst;
    o.seed = c.seed;
    o.workers = c.workers;
    return rate_study(resolve_model(c), c.theta, o);
}

int cmd_simulate(const RunConfig& c) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    auto s = run_simulate(c);
    write_atomic(out_path(c, "observations.csv"), s.csv);
    write_meta(c, {"observations.csv"});
    write_timing(c, elapsed(t0));
    std::printf("wrote %d observations to %s\n", c.observations, out_path(c, "observations.csv").c_str());
    return kOk;
}

int cmd_estimate(const RunConfig& c) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    auto run = run_estimate(c);
    const auto names = param_names(run.model);
    const int q = run.model.q();

    json reps = json::array();
    std::string trace = "replication,iteration";
    for (const auto& n : names) trace += "," + n;
    for (const auto& n : names) trace += ",g_" + n;
    for (const auto& n : names) trace += ",se_" + n;
    trace += "\n";
    std::string estimates = "replication";
    for (const auto& n : names) estimates += "," + n;
    estimates += ",aborted\n";
    json timing_reps = json::array();

    for (std::size_t r = 0; r < run.reports.size(); ++r) {
        const auto& rep = run.reports[r];
        json failures = json::array();
        for (const auto& f : rep.failures)
            failures.push_back({{"iteration", f.iteration},
                                {"attempt", f.attempt},
                                {"kind", f.kind},
                                {"message", f.message},
                                {"observation", f.observation}});
        json item = {{"index", r},
                     {"theta_hat", numbers(rep.theta_hat)},
                     {"aborted", rep.aborted},
                     {"iterations", rep.trace.empty() ? 0 : rep.trace.size() - 1},
                     {"tail", rep.tail},
                     {"failures", failures}};
        if (c.input.empty()) item["data_seed"] = data_seed(c, static_cast<int>(r));
        item["monte_carlo_seed"] = monte_carlo_seed(c, static_cast<int>(r));
        reps.push_back(item);
        timing_reps.push_back(rep.seconds);

        for (std::size_t k = 0; k < rep.trace.size(); ++k) {
            std::vector<double> row{static_cast<double>(r), static_cast<double>(k)};
            row.insert(row.end(), rep.trace[k].begin(), rep.trace[k].end());
            for (int l = 0; l < q; ++l) row.push_back(k < rep.scores.size() ? rep.scores[k][l] : std::nan(""));
            for (int l = 0; l < q; ++l) row.push_back(k < rep.score_se.size() ? rep.score_se[k][l] : std::nan(""));
            trace += csv_line(row);
        }
        std::vector<double> row{static_cast<double>(r)};
        row.insert(row.end(), rep.theta_hat.begin(), rep.theta_hat.end());
        row.push_back(rep.aborted ? 1.0 : 0.0);
        estimates += csv_line(row);
    }

    std::string hist = "parameter,bin,lower,upper,count\n";
    for (int l = 0; l < q; ++l) {
        std::vector<double> v;
        for (const auto& rep : run.reports)
            if (!rep.aborted) v.push_back(rep.theta_hat[l]);
        auto h = freedman_diaconis(v);
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            hist += names[l] + "," + std::to_string(b) + "," + format_number(h.lower + b * h.width) + "," +
                    format_number(h.lower + (b + 1) * h.width) + "," + std::to_string(h.counts[b]) + "\n";
    }

    json report = {{"model", run.model.name},
                   {"parameters", names},
                   {"config_hash", config_hash(c)},
                   {"seed", c.seed},
                   {"paths", run.paths},
                   {"theta0", c.theta0},
                   {"replications", reps},
                   {"summary",
                    {{"mean", numbers(run.summary.mean)},
                     {"sd", numbers(run.summary.sd)},
                     {"se", numbers(run.summary.se)},
                     {"finished", run.summary.count},
                     {"aborted", run.aborted}}}};
    if (c.input.empty()) report["theta_true"] = c.theta;
    else report["input"] = c.input;

    write_atomic(out_path(c, "report.json"), report.dump(2) + "\n");
    write_atomic(out_path(c, "trace.csv"), trace);
    write_atomic(out_path(c, "estimates.csv"), estimates);
    write_atomic(out_path(c, "histogram.csv"), hist);
    write_meta(c, {"report.json", "trace.csv", "estimates.csv", "histogram.csv"});
    write_timing(c, elapsed(t0), {{"replication_seconds", timing_reps}});

    for (int l = 0; l < q; ++l)
        std::printf("%s: mean %.6g sd %.6g over %d replications\n", names[l].c_str(),
                    run.summary.count ? run.summary.mean[l] : std::nan(""),
                    run.summary.count ? run.summary.sd[l] : std::nan(""), run.summary.count);
    if (run.aborted) std::printf("%d replications aborted\n", run.aborted);
    return run.exit_code;
}

int cmd_hurst(const RunConfig& c) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    auto run = run_hurst(c);
    json groups = json::array();
    for (const auto& g : run.groups) groups.push_back({{"start", g.start}, {"length", g.length}, {"h", g.h}});
    json report = {{"input", c.input},
                   {"column", c.column.empty() ? "Y1" : c.column},
                   {"difference", c.difference},
                   {"length", run.length},
                   {"h", run.overall.h},
                   {"windows", run.overall.windows},
                   {"log_rs", run.overall.log_rs},
                   {"log_expected_rs", run.overall.log_expected_rs},
                   {"groups", groups}};
    write_atomic(out_path(c, "hurst.json"), report.dump(2) + "\n");
    write_meta(c, {"hurst.json"});
    write_timing(c, elapsed(t0));
    std::printf("H = %.6g over %d values\n", run.overall.h, run.length);
    for (std::size_t g = 0; g < run.groups.size(); ++g)
        std::printf("group %zu [%d, %d): H = %.6g\n", g, run.groups[g].start,
                    run.groups[g].start + run.groups[g].length, run.groups[g].h);
    return kOk;
}

int cmd_rate_study(const RunConfig& c) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    auto study = run_rate_study(c);
    std::string csv = "steps,error\n";
    json points = json::array();
    for (const auto& p : study.points) {
        csv += std::to_string(p.steps) + "," + format_number(p.error) + "\n";
        points.push_back({{"steps", p.steps}, {"error", p.error}});
    }
    json report = {{"equation", c.rate.equation == RateEquation::euler ? "euler" : "derivative"},
                   {"hurst", c.hurst},
                   {"gamma", c.gamma},
                   {"slope", study.slope},
                   {"intercept", study.intercept},
                   {"target_slope", 1.0 - 2.0 * c.gamma},
                   {"reference_steps", c.rate.reference_steps},
                   {"paths", c.rate.paths},
                   {"points", points}};
    write_atomic(out_path(c, "rate.csv"), csv);
    write_atomic(out_path(c, "rate.json"), report.dump(2) + "\n");
    write_meta(c, {"rate.csv", "rate.json"});
    write_timing(c, elapsed(t0));
    std::printf("slope %.4f (bound %.4f)\n", study.slope, 1.0 - 2.0 * c.gamma);
    return kOk;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Maximum-likelihood estimation for fractional SDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    std::string config_path, preset, input, output, column, model;
    std::uint64_t seed = 0;
    int workers = 0, replications = 0, iterations = 0, paths = 0, groups = 0;
    double hurst = 0.0;
    bool difference = false, list_presets = false;

    struct Flags {
        CLI::Option *config, *preset, *seed, *workers, *output, *input, *hurst, *model;
        CLI::Option *replications = nullptr, *iterations = nullptr, *paths = nullptr;
        CLI::Option *column = nullptr, *groups = nullptr, *difference = nullptr;
    };
    std::map<std::string, Flags> flags;
    auto common = [&](CLI::App* sub) {
        Flags f{};
        f.config = sub->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        f.preset = sub->add_option("-p,--preset", preset, "Named preset applied before the config file");
        f.model = sub->add_option("-m,--model", model, "Built-in model name or model JSON path");
        f.seed = sub->add_option("-s,--seed", seed, "Master seed");
        f.workers = sub->add_option("-w,--workers", workers, "Worker threads (0 = hardware)");
        f.output = sub->add_option("-o,--out", output, "Output directory");
        f.input = sub->add_option("-i,--input", input, "Input CSV");
        f.hurst = sub->add_option("--hurst", hurst, "Hurst index");
        return f;
    };
    auto* sim = app.add_subcommand("simulate", "Simulate observations of a model");
    flags["simulate"] = common(sim);
    auto* est = app.add_subcommand("estimate", "Estimate parameters by stochastic approximation");
    flags["estimate"] = common(est);
    flags["estimate"].replications = est->add_option("-R,--replications", replications, "Replications");
    flags["estimate"].iterations = est->add_option("-K,--iterations", iterations, "Robbins-Monro iterations");
    flags["estimate"].paths = est->add_option("-N,--paths", paths, "Monte-Carlo paths per observation");
    auto* hu = app.add_subcommand("hurst", "R/S estimate of the Hurst index of a CSV column");
    flags["hurst"] = common(hu);
    flags["hurst"].column = hu->add_option("--column", column, "Column name (default Y1)");
    flags["hurst"].groups = hu->add_option("-g,--groups", groups, "Contiguous groups");
    flags["hurst"].difference = hu->add_flag("-d,--difference", difference, "Use first differences");
    auto* rs = app.add_subcommand("rate-study", "Grid-refinement error study");
    flags["rate-study"] = common(rs);
    auto* pr = app.add_subcommand("presets", "List presets");
    pr->add_flag("--json", list_presets, "Print the resolved configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (pr->parsed()) {
            for (const auto& n : preset_names()) {
                if (list_presets) {
                    RunConfig p = preset_config(n);
                    std::printf("%s\n", to_json(p).dump(2).c_str());
                } else {
                    std::printf("%s\n", n.c_str());
                }
            }
            return kOk;
        }
        CLI::App* sub = app.get_subcommands().front();
        const auto& f = flags.at(sub->get_name());
        RunConfig c;
        if (f.preset->count()) c = preset_config(preset);
        c.command = sub->get_name();
        if (f.config->count()) c = load_config(config_path, c);
        c.command = sub->get_name();
        if (f.model->count()) c = apply_json(json{{"model", model}}, c);
        if (f.seed->count()) c.seed = seed;
        if (f.workers->count()) c.workers = workers;
        if (f.output->count()) c.output = output;
        if (f.input->count()) c.input = input;
        if (f.hurst->count()) c.hurst = hurst;
        if (f.replications && f.replications->count()) c.replications = replications;
        if (f.iterations && f.iterations->count()) c.iterations = iterations;
        if (f.paths && f.paths->count()) {
            c.paths = paths;
            c.auto_paths = false;
        }
        if (f.column && f.column->count()) c.column = column;
        if (f.groups && f.groups->count()) c.groups = groups;
        if (f.difference && f.difference->count()) c.difference = difference;

        if (c.command == "simulate") return cmd_simulate(c);
        if (c.command == "estimate") return cmd_estimate(c);
        if (c.command == "hurst") return cmd_hurst(c);
        return cmd_rate_study(c);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const ArgumentError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kConfigError;
    } catch (const UnreliableScoreError& e) {
        std::fprintf(stderr, "unreliable score: %s\n", e.what());
        return kUnreliableScore;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumericError;
    } catch (const CapabilityError& e) {
        std::fprintf(stderr, "unsupported: %s\n", e.what());
        return kNumericError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kConfigError;
    }
}

}  // namespace fdemle::cli
