#include "cli/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fdemle/errors.hpp"

namespace fdemle::cli {

using nlohmann::json;

namespace {

template <class T>
T get(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
    if (!doc.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

LikelihoodMode parse_mode(const std::string& s) {
    if (s == "transition") return LikelihoodMode::transition;
    if (s == "marginal") return LikelihoodMode::marginal;
    throw ConfigError("mode must be 'transition' or 'marginal', got '" + s + "'");
}

SamplerRoute parse_route(const std::string& s) {
    if (s == "automatic") return SamplerRoute::automatic;
    if (s == "generic") return SamplerRoute::generic;
    if (s == "polynomial") return SamplerRoute::polynomial;
    throw ConfigError("route must be 'automatic', 'generic' or 'polynomial', got '" + s + "'");
}

std::string mode_name(LikelihoodMode m) { return m == LikelihoodMode::transition ? "transition" : "marginal"; }

std::string route_name(SamplerRoute r) {
    switch (r) {
        case SamplerRoute::generic: return "generic";
        case SamplerRoute::polynomial: return "polynomial";
        default: return "automatic";
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace

std::vector<std::string> preset_names() { return {"ou-0.5", "ou-4", "linear2d", "ou-rate"}; }

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    c.hurst = 0.6;
    c.observations = 50;
    c.steps = 500;
    c.paths = 500;
    c.iterations = 50;
    c.replications = 20;
    if (name == "ou-0.5") {
        c.model = "fou";
        c.theta = {0.5};
        c.theta0 = {0.3};
        c.spacing = 8.0;
        c.schedule = {0.03, 5.0, 1.0};
        c.max_paths = 256 * c.paths;
    } else if (name == "ou-4") {
        c.model = "fou";
        c.theta = {4.0};
        c.theta0 = {2.0};
        c.spacing = 1.0;
        c.schedule = {2.0, 5.0, 1.0};
        c.max_paths = 256 * c.paths;
    } else if (name == "linear2d") {
        c.model = "linear2d";
        c.theta = {2.0, 4.0};
        c.theta0 = {1.5, 4.5};
        c.spacing = 0.02;
        c.schedule = {0.1, 1.0, 1.0};
        c.max_paths = 1024 * c.paths;
    } else if (name == "ou-rate") {
        c.model = "fou";
        c.theta = {0.5};
        c.hurst = 0.75;
        c.gamma = 0.7;
        c.replications = 1;
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
    }
    return c;
}

UserModelDescription parse_user_model(const json& doc) {
    check_keys(doc, {"name", "m", "d", "params", "initial", "drift", "diffusion"}, "model");
    UserModelDescription u;
    if (doc.contains("name")) u.name = get<std::string>(doc, "name");
    u.m = get<int>(doc, "m");
    u.d = get<int>(doc, "d");
    for (const auto& p : doc.at("params")) {
        check_keys(p, {"name", "lower", "upper"}, "model parameter");
        u.params.push_back({get<std::string>(p, "name"), get<double>(p, "lower"), get<double>(p, "upper")});
    }
    u.initial = get<std::vector<double>>(doc, "initial");
    const json& dr = doc.at("drift");
    check_keys(dr, {"family", "a0", "a", "b0", "b", "param"}, "drift");
    u.drift_family = get<std::string>(dr, "family");
    if (dr.contains("a0")) u.drift_a0 = get<std::vector<double>>(dr, "a0");
    if (dr.contains("a")) u.drift_a = get<std::vector<std::vector<double>>>(dr, "a");
    if (dr.contains("b0")) u.drift_b0 = get<std::vector<double>>(dr, "b0");
    if (dr.contains("b")) u.drift_b = get<std::vector<std::vector<double>>>(dr, "b");
    if (dr.contains("param")) u.sine_param = get<int>(dr, "param");
    const json& df = doc.at("diffusion");
    check_keys(df, {"family", "s0", "s", "param", "kappa"}, "diffusion");
    u.diffusion_family = get<std::string>(df, "family");
    if (df.contains("s0")) u.diffusion_s0 = get<std::vector<double>>(df, "s0");
    if (df.contains("s")) u.diffusion_s = get<std::vector<std::vector<double>>>(df, "s");
    if (df.contains("param")) u.cosine_param = get<int>(df, "param");
    if (df.contains("kappa")) u.cosine_kappa = get<double>(df, "kappa");
    return u;
}

json user_model_json(const UserModelDescription& u) {
    json params = json::array();
    for (const auto& p : u.params) params.push_back({{"name", p.name}, {"lower", p.lower}, {"upper", p.upper}});
    json drift = {{"family", u.drift_family}};
    if (u.drift_family == "sine") {
        drift["param"] = u.sine_param;
    } else {
        drift["a0"] = u.drift_a0;
        drift["a"] = u.drift_a;
        drift["b0"] = u.drift_b0;
        drift["b"] = u.drift_b;
    }
    json diffusion = {{"family", u.diffusion_family}};
    if (u.diffusion_family == "cosine") {
        diffusion["param"] = u.cosine_param;
        diffusion["kappa"] = u.cosine_kappa;
    } else {
        diffusion["s0"] = u.diffusion_s0;
        diffusion["s"] = u.diffusion_s;
    }
    return {{"name", u.name}, {"m", u.m},          {"d", u.d},
            {"params", params}, {"initial", u.initial}, {"drift", drift}, {"diffusion", diffusion}};
}

RunConfig apply_json(const json& doc, RunConfig c) {
    check_keys(doc,
               {"preset", "model", "theta", "theta0", "box", "hurst", "observations", "spacing", "steps", "paths",
                "gamma", "budget_c", "max_paths", "tail_side", "mode", "route", "schedule", "iterations",
                "replications", "seed", "workers", "input", "output", "emit_fbm", "column", "groups", "difference",
                "rate"},
               "config");
    if (doc.contains("preset")) {
        auto p = preset_config(get<std::string>(doc, "preset"));
        p.command = c.command;
        c = p;
    }
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        if (m.is_string()) {
            const auto s = m.get<std::string>();
            if (s.size() > 5 && s.substr(s.size() - 5) == ".json") {
                c.user_model = parse_user_model(read_json_file(s));
                c.model = c.user_model->name;
            } else {
                c.model = s;
                c.user_model.reset();
            }
        } else {
            c.user_model = parse_user_model(m);
            c.model = c.user_model->name;
        }
    }
    if (doc.contains("theta")) c.theta = get<std::vector<double>>(doc, "theta");
    if (doc.contains("theta0")) c.theta0 = get<std::vector<double>>(doc, "theta0");
    if (doc.contains("box")) c.box = get<std::vector<std::pair<double, double>>>(doc, "box");
    if (doc.contains("hurst")) c.hurst = get<double>(doc, "hurst");
    if (doc.contains("observations")) c.observations = get<int>(doc, "observations");
    if (doc.contains("spacing")) c.spacing = get<double>(doc, "spacing");
    if (doc.contains("steps")) c.steps = get<int>(doc, "steps");
    if (doc.contains("paths")) {
        const json& p = doc.at("paths");
        if (p.is_string()) {
            if (p.get<std::string>() != "auto") throw ConfigError("paths must be a positive integer or \"auto\"");
            c.auto_paths = true;
        } else {
            c.paths = get<int>(doc, "paths");
            c.auto_paths = false;
        }
    }
    if (doc.contains("gamma")) c.gamma = get<double>(doc, "gamma");
    if (doc.contains("budget_c")) c.budget_c = get<double>(doc, "budget_c");
    if (doc.contains("max_paths")) c.max_paths = get<int>(doc, "max_paths");
    if (doc.contains("tail_side")) c.tail_side = get<bool>(doc, "tail_side");
    if (doc.contains("mode")) c.mode = parse_mode(get<std::string>(doc, "mode"));
    if (doc.contains("route")) c.route = parse_route(get<std::string>(doc, "route"));
    if (doc.contains("schedule")) {
        const json& s = doc.at("schedule");
        check_keys(s, {"a0", "b", "rho"}, "schedule");
        if (s.contains("a0")) c.schedule.a0 = get<double>(s, "a0");
        if (s.contains("b")) c.schedule.b = get<double>(s, "b");
        if (s.contains("rho")) c.schedule.rho = get<double>(s, "rho");
    }
    if (doc.contains("iterations")) c.iterations = get<int>(doc, "iterations");
    if (doc.contains("replications")) c.replications = get<int>(doc, "replications");
    if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed");
    if (doc.contains("workers")) c.workers = get<int>(doc, "workers");
    if (doc.contains("input")) c.input = get<std::string>(doc, "input");
    if (doc.contains("output")) c.output = get<std::string>(doc, "output");
    if (doc.contains("emit_fbm")) c.emit_fbm = get<bool>(doc, "emit_fbm");
    if (doc.contains("column")) c.column = get<std::string>(doc, "column");
    if (doc.contains("groups")) c.groups = get<int>(doc, "groups");
    if (doc.contains("difference")) c.difference = get<bool>(doc, "difference");
    if (doc.contains("rate")) {
        const json& r = doc.at("rate");
        check_keys(r, {"equation", "steps", "reference_steps", "paths", "horizon", "starts"}, "rate");
        if (r.contains("equation")) {
            const auto e = get<std::string>(r, "equation");
            if (e == "euler") c.rate.equation = RateEquation::euler;
            else if (e == "derivative") c.rate.equation = RateEquation::derivative;
            else throw ConfigError("rate.equation must be 'euler' or 'derivative', got '" + e + "'");
        }
        if (r.contains("steps")) c.rate.steps = get<std::vector<int>>(r, "steps");
        if (r.contains("reference_steps")) c.rate.reference_steps = get<int>(r, "reference_steps");
        if (r.contains("paths")) c.rate.paths = get<int>(r, "paths");
        if (r.contains("horizon")) c.rate.horizon = get<double>(r, "horizon");
        if (r.contains("starts")) c.rate.starts = get<std::vector<double>>(r, "starts");
    }
    return c;
}

RunConfig load_config(const std::string& path, RunConfig base) { return apply_json(read_json_file(path), base); }

json to_json(const RunConfig& c) {
    json doc;
    doc["command"] = c.command;
    doc["preset"] = c.preset;
    if (c.user_model) doc["model"] = user_model_json(*c.user_model);
    else doc["model"] = c.model;
    doc["theta"] = c.theta;
    doc["theta0"] = c.theta0;
    doc["box"] = c.box;
    doc["hurst"] = c.hurst;
    doc["observations"] = c.observations;
    doc["spacing"] = c.spacing;
    doc["steps"] = c.steps;
    if (c.auto_paths) doc["paths"] = "auto";
    else doc["paths"] = c.paths;
    doc["gamma"] = c.gamma;
    doc["budget_c"] = c.budget_c;
    doc["max_paths"] = c.max_paths;
    doc["tail_side"] = c.tail_side;
    doc["mode"] = mode_name(c.mode);
    doc["route"] = route_name(c.route);
    doc["schedule"] = {{"a0", c.schedule.a0}, {"b", c.schedule.b}, {"rho", c.schedule.rho}};
    doc["iterations"] = c.iterations;
    doc["replications"] = c.replications;
    doc["seed"] = c.seed;
    doc["input"] = c.input;
    doc["emit_fbm"] = c.emit_fbm;
    doc["column"] = c.column;
    doc["groups"] = c.groups;
    doc["difference"] = c.difference;
    doc["rate"] = {{"equation", c.rate.equation == RateEquation::euler ? "euler" : "derivative"},
                   {"steps", c.rate.steps},
                   {"reference_steps", c.rate.reference_steps},
                   {"paths", c.rate.paths},
                   {"horizon", c.rate.horizon},
                   {"starts", c.rate.starts}};
    return doc;
}

ModelSpec resolve_model(const RunConfig& c) {
    try {
        if (c.user_model) return build_user_model(*c.user_model);
        return get_model(c.model);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

LikelihoodConfig likelihood_config(const RunConfig& c, const ModelSpec& model) {
    LikelihoodConfig lc;
    lc.hurst = c.hurst;
    lc.steps = c.steps;
    lc.paths = c.paths;
    if (c.auto_paths) {
        const double horizon = c.mode == LikelihoodMode::transition ? c.spacing : c.spacing * c.observations;
        auto b = allocate_budget(c.steps, c.gamma, horizon, model.m, model.d, c.budget_c);
        lc.paths = static_cast<int>(b.paths);
        if (b.capped) std::fprintf(stderr, "warning: %s\n", b.warning.c_str());
    }
    lc.max_paths = c.max_paths;
    lc.tail_side = c.tail_side;
    lc.mode = c.mode;
    lc.route = c.route;
    lc.workers = c.workers;
    lc.seed = c.seed;
    return lc;
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& s) { throw ConfigError(s); };
    if (!(c.hurst > 0.5 && c.hurst < 1.0)) fail("hurst must lie in (1/2, 1) (H > 1/2 required)");
    if (c.observations < 1) fail("observations must be at least 1");
    if (!(c.spacing > 0.0)) fail("spacing must be positive");
    if (c.steps < 1) fail("steps must be at least 1");
    if (!c.auto_paths && c.paths < 1) fail("paths must be at least 1");
    if (c.max_paths < 0) fail("max_paths must be non-negative");
    if (c.auto_paths && !(c.gamma > 0.5 && c.gamma < c.hurst)) fail("gamma must lie in (1/2, hurst)");
    if (c.iterations < 1) fail("iterations must be at least 1");
    if (c.replications < 1) fail("replications must be at least 1");
    if (c.workers < 0) fail("workers must be non-negative");
    if (auto v = validate_schedule(c.schedule)) fail("schedule: " + *v);
    if (!c.input.empty() && !std::filesystem::exists(c.input)) fail("input file '" + c.input + "' does not exist");
    if (c.groups < 1) fail("groups must be at least 1");
    if (c.command == "rate-study") {
        if (c.rate.steps.size() < 2) fail("rate.steps needs at least two entries to fit a slope");
        if (!(c.gamma > 0.5 && c.gamma < c.hurst)) fail("gamma must lie in (1/2, hurst)");
    }
    if (c.command == "hurst") return;
    const ModelSpec model = resolve_model(c);
    auto check = [&](const std::vector<double>& t, const char* what) {
        try {
            check_theta(model, t);
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string(what) + ": " + e.what());
        }
    };
    if (c.command != "estimate" || c.input.empty()) check(c.theta, "theta");
    if (c.command == "estimate") check(c.theta0, "theta0");
    if (!c.box.empty() && c.box.size() != static_cast<std::size_t>(model.q()))
        fail("box needs one interval per parameter");
    for (const auto& [lo, hi] : c.box)
        if (!(lo < hi)) fail("box intervals need lower < upper");
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
    return buf;
}

}  // namespace fdemle::cli
