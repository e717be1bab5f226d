#include "commands.hpp"

#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "advrl/csv.hpp"
#include "advrl/discovery.hpp"
#include "advrl/game.hpp"
#include "advrl/instances.hpp"
#include "advrl/online.hpp"
#include "advrl/parallel.hpp"

namespace advrl::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

Json header(const Json& config) { return {{"version", kVersion}, {"config", config}}; }

void write_json(const fs::path& path, const Json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

// Comment lines carry provenance; everything after them is the CSV body.
std::string csv_document(const Json& config, const std::string& body) {
    return "# " + std::string(kVersion) + "\n# config " + config.dump() + "\n" + body;
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const Json::exception&) {
        throw ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
}

Json& block(Json& config, const char* key) {
    if (!config.contains(key)) config[key] = Json::object();
    if (!config[key].is_object()) throw ValidationError(std::string("config.") + key + " must be an object");
    return config[key];
}

DiscoveryConfig discovery_config(Json& config, const Globals& g) {
    Json& d = block(config, "discovery");
    DiscoveryConfig cfg;
    cfg.delta = get_or(d, "delta", cfg.delta);
    cfg.max_iterations = get_or(d, "max_iterations", cfg.max_iterations);
    cfg.attacker_cap = get_or(d, "attacker_cap", cfg.attacker_cap);
    cfg.node_cap = get_or(d, "node_cap", cfg.node_cap);
    cfg.threads = g.threads;
    d["delta"] = cfg.delta;
    d["max_iterations"] = cfg.max_iterations;
    d["attacker_cap"] = cfg.attacker_cap;
    d["node_cap"] = cfg.node_cap;
    cfg.validate();
    return cfg;
}

struct Loaded {
    Instance instance;
    PolicyClass policies;
    std::vector<PureAttacker> attackers;
    PayoffTable table;
    std::size_t node_cap;
};

Loaded load_with_class(Json& config, const Globals& g, bool with_table) {
    Instance instance = load_instance(config.at("instance"), g.base_dir);
    auto cfg = discovery_config(config, g);
    const fs::path class_path = config.contains("class_file")
                                    ? resolve(config["class_file"].get<std::string>(), g.base_dir)
                                    : g.out_dir / "class.json";
    config["class_file"] = class_path.string();
    PolicyClass policies = class_from_json(parse_json(read_file(class_path), class_path.string()));
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const auto& p = policies[i];
        if (p.num_states() != instance.mdp.num_states() || p.num_actions() != instance.mdp.num_actions() ||
            p.horizon() != instance.mdp.horizon()) {
            throw ValidationError("policy " + std::to_string(i) + " does not match the instance dimensions");
        }
    }
    if (!with_table) return {std::move(instance), std::move(policies), {}, {}, cfg.node_cap};
    auto attackers = enumerate_pure_attackers(instance.mdp, instance.perturbation, cfg.attacker_cap);
    auto table = payoff_table(instance.mdp, policies, attackers, cfg.node_cap, g.threads);
    return {std::move(instance), std::move(policies), std::move(attackers), std::move(table), cfg.node_cap};
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

Instance load_instance(const Json& spec, const fs::path& base_dir) {
    if (spec.is_string()) {
        const auto path = resolve(spec.get<std::string>(), base_dir);
        return instance_from_json(parse_json(read_file(path), path.string()));
    }
    if (!spec.is_object()) throw ValidationError("config.instance must be a path or an object");
    if (spec.contains("file")) return load_instance(spec["file"], base_dir);
    if (!spec.contains("family")) return instance_from_json(spec);

    const auto family = spec["family"].get<std::string>();
    if (family == "prop1") return gen_prop1(get_or(spec, "horizon", 3));
    if (family == "thm2") return gen_thm2(get_or(spec, "horizon", 1));
    if (family == "appendix_c") return gen_appendix_c_demo().instance;
    if (family == "random") {
        RandomSpec r;
        r.num_states = get_or(spec, "num_states", r.num_states);
        r.num_actions = get_or(spec, "num_actions", r.num_actions);
        r.horizon = get_or(spec, "horizon", r.horizon);
        r.degree = get_or(spec, "degree", r.degree);
        r.sparsity = get_or(spec, "sparsity", r.sparsity);
        r.seed = get_or(spec, "seed", r.seed);
        return gen_random(r);
    }
    throw ValidationError("config.instance.family: unknown family '" + family + "'");
}

int cmd_gen(Json config, const Globals& g, std::ostream& log) {
    Json& spec = block(config, "instance");
    if (g.seed) spec["seed"] = *g.seed;
    Instance instance = load_instance(spec, g.base_dir);
    const auto issues = validate_mdp(instance.mdp);
    if (!issues.empty()) throw ValidationError(issues.front().location + ": " + issues.front().message);
    Json doc = instance_to_json(instance);
    doc["version"] = kVersion;
    doc["config"] = config;
    write_json(g.out_dir / "instance.json", doc);
    log << "wrote " << (g.out_dir / "instance.json").string() << "\n";
    return ok;
}

int cmd_discover(Json config, const Globals& g, std::ostream& log) {
    Instance instance = load_instance(config.at("instance"), g.base_dir);
    const auto cfg = discovery_config(config, g);
    const auto result = discover(instance.mdp, instance.perturbation, cfg);

    Json doc = header(config);
    doc["policies"] = class_to_json(result.policies);
    doc["stopped_reason"] = to_string(result.trace.stopped_reason);
    doc["final_score"] = result.trace.final_score;
    doc["gap_pure"] = result.trace.gap_pure;
    doc["num_attackers"] = result.attackers.size();
    doc["br_values"] = result.br_values;
    write_json(g.out_dir / "class.json", doc);

    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    write_file_atomic(g.out_dir / "trace.csv", csv_document(config, trace.str()));
    std::ostringstream payoff;
    write_payoff_csv(payoff, result.table);
    write_file_atomic(g.out_dir / "payoff.csv", csv_document(config, payoff.str()));

    log << "discovered " << result.policies.size() << " policies, stopped by "
        << to_string(result.trace.stopped_reason) << ", gap_pure " << format_double(result.trace.gap_pure) << "\n";
    return result.trace.stopped_reason == StopReason::cap ? cap_exceeded : ok;
}

int cmd_certify(Json config, const Globals& g, std::ostream& log) {
    Loaded l = load_with_class(config, g, true);
    Json& c = block(config, "certification");
    const double resolution = get_or(c, "resolution", 0.05);
    c["resolution"] = resolution;

    const auto br = best_response_values(l.instance.mdp, l.attackers, l.node_cap, g.threads);
    const auto cert = certify_gap_pure(l.table, br);

    Json margins = Json::array();
    for (std::size_t i = 0; i < l.policies.size(); ++i) {
        Json entry{{"policy_id", i}};
        if (l.policies.size() == 1) {
            entry["margin"] = nullptr;  // no rest to compare against
        } else {
            std::vector<int> others;
            for (std::size_t k = 0; k < l.policies.size(); ++k) {
                if (k != i) others.push_back(static_cast<int>(k));
            }
            PayoffTable rest(static_cast<Eigen::Index>(others.size()), l.table.cols());
            for (std::size_t k = 0; k < others.size(); ++k) rest.row(static_cast<Eigen::Index>(k)) = l.table.row(others[k]);
            const auto d = dominance_margin(l.table.row(static_cast<Eigen::Index>(i)), rest);
            entry["margin"] = d.margin;
            entry["omega_over"] = others;
            entry["omega"] = vector_json(d.omega.weights());
        }
        margins.push_back(std::move(entry));
    }

    Json doc = header(config);
    doc["gap_pure"] = cert.gap;
    doc["witness_attacker_id"] = cert.witness_attacker_id;
    doc["br_values"] = br;
    doc["dominance_margins"] = std::move(margins);
    try {
        doc["gap_mixed_estimate"] = estimate_gap_mixed(l.instance.mdp, l.table, l.attackers, resolution, l.node_cap);
    } catch (const UnsupportedScale& e) {
        doc["gap_mixed_estimate"] = nullptr;
        doc["warning"] = e.what();
    }
    write_json(g.out_dir / "certify.json", doc);
    log << "gap_pure " << format_double(cert.gap) << " witness " << cert.witness_attacker_id << "\n";
    return ok;
}

int cmd_adapt(Json config, const Globals& g, std::ostream& log) {
    Loaded l = load_with_class(config, g, false);
    Json& o = block(config, "online");
    Exp3Config base;
    if (o.contains("eta") && !(o["eta"].is_string() && o["eta"].get<std::string>() == "auto")) {
        base.eta = get_or(o, "eta", 0.0);
    }
    base.episodes = get_or(o, "episodes", base.episodes);
    base.snapshot_every = get_or(o, "snapshot_every", base.snapshot_every);
    base.rng_algorithm = get_or(o, "rng_algorithm", base.rng_algorithm);
    o["eta"] = base.eta ? Json(*base.eta) : Json("auto");
    o["episodes"] = base.episodes;
    o["snapshot_every"] = base.snapshot_every;
    o["rng_algorithm"] = base.rng_algorithm;
    base.validate();

    std::vector<std::uint64_t> seeds;
    if (g.seed) {
        seeds = {*g.seed};
    } else if (config.contains("seeds")) {
        seeds = config["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (seeds.empty()) throw ValidationError("config.seeds must be non-empty for online runs");
    config["seeds"] = seeds;

    const auto schedule = schedule_from_json(config.at("schedule"), l.instance.mdp, l.instance.perturbation, "$.schedule");
    const auto& mdp = l.instance.mdp;
    const std::size_t K = l.policies.size();

    struct SeedResult {
        bool ok = false;
        std::string error;
        double cumulative = 0.0, regret_tilde = 0.0, regret_full = 0.0;
        Eigen::VectorXd final_weights;
    };
    std::vector<SeedResult> results(seeds.size());
    parallel_for(seeds.size(), g.threads, [&](std::size_t i) {
        auto& r = results[i];
        try {
            Exp3Config cfg = base;
            cfg.seed = seeds[i];
            const auto trace = exp3_adapt(mdp, l.instance.perturbation, l.policies, schedule, cfg,
                                          kDefaultAttackerCap, l.node_cap);
            const auto running = running_regrets(trace, mdp, l.policies, l.node_cap);
            std::ostringstream episodes;
            write_online_csv(episodes, trace, running);
            std::ostringstream weights;
            write_weights_csv(weights, trace);
            const auto stem = std::to_string(seeds[i]);
            write_file_atomic(g.out_dir / ("online_" + stem + ".csv"), csv_document(config, episodes.str()));
            write_file_atomic(g.out_dir / ("weights_" + stem + ".csv"), csv_document(config, weights.str()));
            r.cumulative = trace.cumulative_reward;
            r.regret_tilde = running.versus_class.back();
            r.regret_full = running.versus_all.back();
            r.final_weights = trace.final_weights;
            r.ok = true;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });

    Json per_seed = Json::array();
    std::vector<double> cum, tilde, full;
    int failures = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            ++failures;
            per_seed.push_back({{"seed", seeds[i]}, {"error", r.error}});
            log << "seed " << seeds[i] << " failed: " << r.error << "\n";
            continue;
        }
        cum.push_back(r.cumulative);
        tilde.push_back(r.regret_tilde);
        full.push_back(r.regret_full);
        per_seed.push_back({{"seed", seeds[i]},
                            {"cumulative_reward", r.cumulative},
                            {"regret_tilde", r.regret_tilde},
                            {"regret_full", r.regret_full},
                            {"final_weights", vector_json(r.final_weights)}});
    }
    const double T = static_cast<double>(base.episodes);
    auto stats = [&](const std::vector<double>& xs) {
        return Json{{"mean", mean(xs)}, {"stddev", stddev(xs)}, {"mean_per_episode", mean(xs) / T}};
    };
    Json doc = header(config);
    doc["num_policies"] = K;
    doc["horizon"] = mdp.horizon();
    doc["episodes"] = base.episodes;
    doc["eta"] = base.resolved_eta(K);
    doc["cumulative_reward"] = stats(cum);
    doc["regret_tilde"] = stats(tilde);
    doc["regret_full"] = stats(full);
    doc["regret_bound_per_episode"] = K > 1 ? Json(exp3_regret_bound(mdp.horizon(), K, base.episodes)) : Json(0.0);
    doc["failed_seeds"] = failures;
    doc["runs"] = std::move(per_seed);
    write_json(g.out_dir / "summary.json", doc);
    log << "adapted over " << seeds.size() - static_cast<std::size_t>(failures) << " seeds, mean regret_tilde/T "
        << format_double(mean(tilde) / T) << "\n";
    return failures == 0 ? ok : validation;
}

int cmd_attack(Json config, const Globals& g, std::ostream& log) {
    Loaded l = load_with_class(config, g, true);
    if (l.policies.empty()) throw ValidationError("attack needs a non-empty policy class");
    const auto attack = optimal_adaptive_attack(l.table, l.attackers);
    Json doc = header(config);
    doc["attacker"] = attacker_to_json(attack.attacker, l.instance.perturbation);
    doc["value"] = attack.value;
    doc["best_static_worst_case"] = attack.best_static_worst_case;
    doc["pointwise_worst_case"] = attack.pointwise_worst_case;
    write_json(g.out_dir / "attack.json", doc);
    log << "adaptive attack value " << format_double(attack.value) << "\n";
    return ok;
}

int cmd_eval(Json config, const Globals& g, std::ostream& log) {
    Loaded l = load_with_class(config, g, false);
    Json& e = block(config, "eval");
    const int id = get_or(e, "policy_id", 0);
    e["policy_id"] = id;
    if (id < 0 || static_cast<std::size_t>(id) >= l.policies.size()) {
        throw ValidationError("config.eval.policy_id out of range");
    }
    if (!e.contains("attacker")) e["attacker"] = "identity";
    const auto attacker = attacker_from_json(e["attacker"], l.instance.mdp, l.instance.perturbation, "$.eval.attacker");
    const double value = evaluate(l.instance.mdp, l.policies[static_cast<std::size_t>(id)], attacker, l.node_cap);
    Json doc = header(config);
    doc["value"] = value;
    write_json(g.out_dir / "eval.json", doc);
    log << format_double(value) << "\n";
    return ok;
}

int report_exception(std::ostream& log) {
    try {
        throw;
    } catch (const CapExceeded& e) {
        log << "error: " << e.what() << "\n";
        return cap_exceeded;
    } catch (const SolverFailure& e) {
        log << "error: " << e.what() << "\n";
        return solver_failure;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return validation;
    }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust victim policy classes for tabular MDPs under observation attacks"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    Globals g;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "seed override");

    std::string family;
    int horizon = 0, states = 0, actions = 0, degree = 0;
    double sparsity = -1.0, delta = -1.0;
    std::string class_file;

    auto* gen = app.add_subcommand("gen", "write an instance file");
    gen->add_option("--family", family, "prop1 | thm2 | random | appendix_c");
    gen->add_option("--horizon", horizon);
    gen->add_option("--states", states);
    gen->add_option("--actions", actions);
    gen->add_option("--degree", degree);
    gen->add_option("--sparsity", sparsity);
    auto* disc = app.add_subcommand("discover", "grow a non-dominated policy class");
    disc->add_option("--delta", delta);
    auto* cert = app.add_subcommand("certify", "gap and dominance report for a class");
    auto* adapt = app.add_subcommand("adapt", "online adaptation over a class");
    auto* attack = app.add_subcommand("attack", "optimal attack on an adaptive victim");
    auto* eval = app.add_subcommand("eval", "value of one policy against one attacker");
    for (auto* sub : {cert, adapt, attack, eval}) sub->add_option("--class", class_file, "policy class file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : validation;
    }

    try {
        Json config = Json::object();
        if (!config_path.empty()) {
            config = parse_json(read_file(config_path), config_path);
            if (!config.is_object()) throw ValidationError(config_path + ": config must be a JSON object");
            g.base_dir = fs::path(config_path).parent_path();
            if (g.base_dir.empty()) g.base_dir = ".";
        }
        if (config.contains("output_dir") && app.get_option("--out")->count() == 0) {
            out_dir = resolve(config["output_dir"].get<std::string>(), g.base_dir).string();
        }
        g.out_dir = out_dir;
        config["output_dir"] = out_dir;
        if (seed_opt->count() > 0) g.seed = seed;
        if (!class_file.empty()) config["class_file"] = fs::absolute(class_file).string();

        if (gen->parsed()) {
            Json& spec = block(config, "instance");
            if (!family.empty()) spec["family"] = family;
            if (horizon > 0) spec["horizon"] = horizon;
            if (states > 0) spec["num_states"] = states;
            if (actions > 0) spec["num_actions"] = actions;
            if (degree > 0) spec["degree"] = degree;
            if (sparsity >= 0.0) spec["sparsity"] = sparsity;
            return cmd_gen(std::move(config), g, err);
        }
        if (!config.contains("instance")) throw ValidationError("config.instance is required");
        if (disc->parsed()) {
            if (delta >= 0.0) block(config, "discovery")["delta"] = delta;
            return cmd_discover(std::move(config), g, err);
        }
        if (cert->parsed()) return cmd_certify(std::move(config), g, err);
        if (adapt->parsed()) return cmd_adapt(std::move(config), g, err);
        if (attack->parsed()) return cmd_attack(std::move(config), g, err);
        return cmd_eval(std::move(config), g, err);
    } catch (...) {
        return report_exception(err);
    }
}

}  // namespace advrl::cli
