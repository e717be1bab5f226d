// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "advrl/csv.hpp"
#include "advrl/discovery.hpp"
#include "advrl/game.hpp"
#include "advrl/instances.hpp"
#include "advrl/online.hpp"
#include "advrl/parallel.hpp"
#include "advrl/rng.hpp"
#include "commands.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace advrl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// -- 1 ---------------------------------------------------------------------
Outcome hardness() {
    const auto in = gen_thm2(1);
    const auto all = enumerate_pure_attackers(in.mdp, in.perturbation);
    const auto br = best_response_values(in.mdp, all);
    double min_single_gap = 1e300;
    for (const auto& p : testing::thm2_policies(in)) {
        min_single_gap = std::min(min_single_gap, certify_gap_pure(payoff_table(in.mdp, testing::make_class({p}), all), br).gap);
    }
    const auto r1 = discover(in.mdp, in.perturbation, DiscoveryConfig{});
    const double gap1 = certify_gap_pure(r1.table, r1.br_values).gap;
    const auto in2 = gen_thm2(2);
    const auto r2 = discover(in2.mdp, in2.perturbation, DiscoveryConfig{});
    double min_f = 1e300;
    for (std::size_t k = 0; k + 1 < r2.trace.steps.size() && k < 3; ++k) min_f = std::min(min_f, r2.trace.steps[k].f);
    const bool pass = min_single_gap >= 0.25 - 1e-9 && r1.policies.size() == 2 && std::abs(gap1) <= 1e-9 &&
                      r2.policies.size() == 4 && min_f >= 0.25 - 1e-9;
    return {pass, "min singleton gap " + fmt(min_single_gap) + ", H=1 |class| " + std::to_string(r1.policies.size()) +
                      " gap " + fmt(gap1) + ", H=2 |class| " + std::to_string(r2.policies.size()) + " min f_k(k<4) " +
                      fmt(min_f)};
}

// -- 2 ---------------------------------------------------------------------
Outcome discovery_trace() {
    int threshold = 0, monotone = 0, margin_ok = 0, certified = 0, steps_total = 0, margin_bad_steps = 0;
    double worst_margin_excess = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const int S = 2 + static_cast<int>(i % 3);
        const int A = 2 + static_cast<int>((i / 3) % 2);
        const int H = 1 + static_cast<int>((i / 6) % 3);
        const auto in = gen_random(testing::random_spec(S, A, H, 2, 1000 + i));
        DiscoveryConfig cfg;
        cfg.delta = 0.01;
        const auto r = discover(in.mdp, in.perturbation, cfg);
        threshold += r.trace.stopped_reason == StopReason::threshold;
        bool mono = true, margins = true;
        for (std::size_t k = 0; k < r.trace.steps.size(); ++k) {
            const auto& s = r.trace.steps[k];
            if (k > 0 && s.f > r.trace.steps[k - 1].f + 1e-12) mono = false;
            ++steps_total;
            if (std::abs(s.dominance_margin - s.f) > 1e-9) {
                margins = false;
                ++margin_bad_steps;
                worst_margin_excess = std::max(worst_margin_excess, s.dominance_margin - s.f);
            }
        }
        monotone += mono;
        margin_ok += margins;
        certified += certify_gap_pure(r.table, r.br_values).gap <= cfg.delta + 1e-9;
    }
    const bool pass = threshold == 50 && monotone == 50 && margin_ok == 50 && certified == 50;
    return {pass, "threshold " + std::to_string(threshold) + "/50, monotone " + std::to_string(monotone) +
                      "/50, margin==f_k " + std::to_string(margin_ok) + "/50 (" + std::to_string(margin_bad_steps) +
                      " of " + std::to_string(steps_total) + " steps differ, max margin-f_k " +
                      fmt(worst_margin_excess) + "), certified " + std::to_string(certified) + "/50"};
}

// -- 3 ---------------------------------------------------------------------
Outcome best_response_oracle() {
    struct Shape { int s, a, h; };
    // (S*A)^H <= 1e4 and a brute-force space small enough to enumerate.
    const Shape shapes[] = {{2, 2, 1}, {2, 2, 2}, {2, 2, 3}, {3, 2, 1}, {3, 2, 2}, {2, 3, 2}, {3, 3, 1}, {4, 2, 1}};
    CounterRng rng(2024, Stream::learner);
    int matched = 0, checks = 0;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto& sh = shapes[i % std::size(shapes)];
        const auto in = gen_random(testing::random_spec(sh.s, sh.a, sh.h, 2, 3000 + i));
        const auto all = enumerate_pure_attackers(in.mdp, in.perturbation);
        std::vector<int> observable;
        for (int o = 0; o < sh.s; ++o) {
            for (int s = 0; s < sh.s; ++s) {
                if (in.perturbation.contains(s, o)) {
                    observable.push_back(o);
                    break;
                }
            }
        }
        const auto j1 = static_cast<std::size_t>(rng.next() % all.size());
        auto j2 = static_cast<std::size_t>(rng.next() % all.size());
        if (j2 == j1) j2 = (j1 + 1) % all.size();
        const double w = 0.1 + 0.8 * rng.uniform();
        const std::vector<MixedAttacker> attackers{
            MixedAttacker::pure(all[j1]), MixedAttacker({all[j1], all[j2]}, Eigen::Vector2d(w, 1.0 - w))};
        for (const auto& mix : attackers) {
            std::vector<double> weights(mix.weights().data(), mix.weights().data() + mix.size());
            const double brute = oracle::brute_force_best(in.mdp, observable, mix.support(), weights);
            const auto br = best_response(in.mdp, in.perturbation, mix);
            const double sim = oracle::path_value(in.mdp, oracle::policy_fn(br.policy), oracle::attack_fn(mix.member(0)));
            double sim_total = mix.weight(0) * sim;
            for (std::size_t m = 1; m < mix.size(); ++m) {
                sim_total += mix.weight(m) * oracle::path_value(in.mdp, oracle::policy_fn(br.policy), oracle::attack_fn(mix.member(m)));
            }
            const double err = std::max(std::abs(br.value - brute), std::abs(sim_total - brute));
            worst = std::max(worst, err);
            matched += err <= 1e-9;
            ++checks;
        }
    }
    return {matched == checks, std::to_string(matched) + "/" + std::to_string(checks) +
                                   " pure and mixed attackers matched, max error " + fmt(worst)};
}

// -- 4 ---------------------------------------------------------------------
Outcome matrix_games() {
    CounterRng rng(4242, Stream::learner);
    int ok = 0;
    double worst_dev = 0.0, worst_fp = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto rows = 1 + static_cast<Eigen::Index>(rng.next() % 8);
        const auto cols = 1 + static_cast<Eigen::Index>(rng.next() % 64);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = 16.0 * rng.uniform();
        }
        const auto s = solve_matrix_game(m, Orientation::row_max);
        const double v = s.row_mix.dot(m * s.col_mix);
        const double dev = std::max((m * s.col_mix).maxCoeff() - v, v - (s.row_mix.transpose() * m).minCoeff());
        const auto fp = oracle::fictitious_play(m, 2e-3, 50'000'000);
        const double fp_err = std::abs(s.value - 0.5 * (fp.lower + fp.upper));
        worst_dev = std::max(worst_dev, dev);
        worst_fp = std::max(worst_fp, fp_err);
        ok += dev <= 1e-8 && fp_err <= 1e-3 && fp.upper - fp.lower <= 2e-3;
    }
    Eigen::Matrix2d pennies;
    pennies << 1, 0, 0, 1;
    const double pv = solve_matrix_game(pennies, Orientation::row_max).value;
    const bool pass = ok == 200 && std::abs(pv - 0.5) <= 1e-9;
    return {pass, std::to_string(ok) + "/200 matrices, max deviation " + fmt(worst_dev) + ", max |v - FP| " +
                      fmt(worst_fp) + ", matching pennies " + fmt(pv)};
}

PolicyClass prop1_sequences(const Instance& in) {
    PolicyClass c;
    for (int first : {prop1::a_good, prop1::a_bad}) {
        for (int second : {prop1::a_good, prop1::a_bad}) {
            const std::vector<int> seq{first, second, prop1::a_good};
            c.add(open_loop_policy(in.mdp, in.perturbation, seq));
        }
    }
    return c;
}

double regret_tilde(const TabularMdp& mdp, const PolicyClass& cls, const OnlineTrace& trace) {
    return regret_vs_class(trace, episode_values(trace, slot_values(mdp, cls, trace)));
}

// -- 5 ---------------------------------------------------------------------
Outcome exp3_bound() {
    const auto in = gen_prop1(3);
    const auto cls = prop1_sequences(in);
    const StaticSchedule dummy{MixedAttacker::pure(PureAttacker::constant(3, 3, prop1::s_dummy))};
    constexpr int T = 10000;
    std::vector<double> per_seed(100);
    parallel_for(100, std::max(1u, std::thread::hardware_concurrency()), [&](std::size_t seed) {
        Exp3Config cfg;
        cfg.episodes = T;
        cfg.seed = seed;
        cfg.snapshot_every = T;
        per_seed[seed] = regret_tilde(in.mdp, cls, exp3_adapt(in.mdp, in.perturbation, cls, dummy, cfg)) / T;
    });
    double mean = 0.0;
    for (double x : per_seed) mean += x / 100.0;
    const double bound = exp3_regret_bound(3, 4, T);
    return {mean <= bound, "mean regret_tilde/T " + fmt(mean) + " vs bound " + fmt(bound)};
}

// -- 6 ---------------------------------------------------------------------
Outcome regret_decomposition() {
    const auto in = gen_thm2(1);
    const auto r = discover(in.mdp, in.perturbation, DiscoveryConfig{});
    const double gap = certify_gap_pure(r.table, r.br_values).gap;
    int ok = 0, runs = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j < r.attackers.size(); ++j) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Exp3Config cfg;
            cfg.episodes = 2000;
            cfg.seed = seed;
            const auto trace = exp3_adapt(in.mdp, in.perturbation, r.policies,
                                          StaticSchedule{MixedAttacker::pure(r.attackers[j])}, cfg);
            const double diff = std::abs(regret_vs_all(trace, in.mdp, r.policies) - regret_tilde(in.mdp, r.policies, trace));
            worst = std::max(worst, diff);
            ok += diff <= 1e-9;
            ++runs;
        }
    }
    return {ok == runs && std::abs(gap) <= 1e-9,
            "certified gap " + fmt(gap) + ", " + std::to_string(ok) + "/" + std::to_string(runs) +
                " runs with |regret_full - regret_tilde| <= 1e-9 (max " + fmt(worst) + ")"};
}

// -- 7 ---------------------------------------------------------------------
Outcome adaptive_attack() {
    const auto in = gen_thm2(1);
    const auto all = enumerate_pure_attackers(in.mdp, in.perturbation);
    const auto ps = testing::thm2_policies(in);
    const auto pair = testing::make_class({ps[0], ps[2]});
    const double v = optimal_adaptive_attack(payoff_table(in.mdp, pair, all), all).value;
    int ok = 0;
    for (int mask = 1; mask < 16; ++mask) {
        std::vector<VictimPolicy> members;
        for (int i = 0; i < 4; ++i) {
            if (mask & (1 << i)) members.push_back(ps[static_cast<std::size_t>(i)]);
        }
        const auto t = payoff_table(in.mdp, testing::make_class(members), all);
        const auto a = optimal_adaptive_attack(t, all);
        ok += a.value >= a.best_static_worst_case - 1e-9;
    }
    return {std::abs(v - 0.5) <= 1e-9 && ok == 15,
            "value for {pi1, pi3} " + fmt(v) + ", adaptive >= static worst case in " + std::to_string(ok) + "/15 classes"};
}

// -- 8 ---------------------------------------------------------------------
Outcome dynamic_schedules() {
    const auto in = gen_thm2(1);
    const auto all = enumerate_pure_attackers(in.mdp, in.perturbation);
    const auto good = MixedAttacker::pure(all[testing::kGood]);
    const auto bad = MixedAttacker::pure(all[testing::kBad]);

    bool patterns = true;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto p0 = schedule_pattern(ProbabilisticSchedule{0.0, 50, bad, good}, 1000, seed);
        const auto p1 = schedule_pattern(ProbabilisticSchedule{1.0, 50, bad, good}, 1000, seed);
        const auto per = schedule_pattern(PeriodicSchedule{200, 100, bad, good}, 1000, seed);
        for (int t = 1; t <= 1000; ++t) {
            const auto i = static_cast<std::size_t>(t - 1);
            patterns &= p0[i] == 1;
            patterns &= p1[i] == ((t / 50) % 2 == 1 ? 0 : 1);
            patterns &= per[i] == ((t - 1) % 200 < 100 ? 0 : 1);
        }
    }

    // pi1 is best while the swap attacker is off, pi3 while it is on.
    const auto ps = testing::thm2_policies(in);
    const auto cls = testing::make_class({ps[0], ps[2]});
    const PeriodicSchedule schedule{200, 100, bad, good};
    constexpr int T = 10000;
    constexpr int seeds = 20;
    double learner = 0.0;
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(2);
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        Exp3Config cfg;
        cfg.episodes = T;
        cfg.seed = seed;
        cfg.snapshot_every = T;
        const auto trace = exp3_adapt(in.mdp, in.perturbation, cls, schedule, cfg);
        const auto values = episode_values(trace, slot_values(in.mdp, cls, trace));
        for (Eigen::Index t = 0; t < values.cols(); ++t) {
            learner += values(trace.episodes[static_cast<std::size_t>(t)].chosen_policy_id, t) / (T * seeds);
        }
        fixed += values.rowwise().sum() / (T * seeds);
    }
    const bool beats = learner > fixed.maxCoeff();
    return {patterns && beats, std::string("schedule patterns ") + (patterns ? "exact" : "MISMATCH") +
                                   ", time-averaged expected reward EXP3 " + fmt(learner) + " vs fixed pi1 " +
                                   fmt(fixed(0)) + ", pi3 " + fmt(fixed(1))};
}

// -- 9 ---------------------------------------------------------------------
std::string csv_body(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line, body;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] != '#') body += line + "\n";
    }
    return body;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "advrl");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    return cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / "advrl_acceptance_repro";
    fs::remove_all(root);
    fs::create_directories(root);
    Json cfg = {{"instance", {{"family", "random"}, {"num_states", 3}, {"num_actions", 2}, {"horizon", 2},
                              {"degree", 2}, {"seed", 7}}},
                {"discovery", {{"delta", 0.0}}},
                {"seeds", {11, 12}},
                {"online", {{"episodes", 500}}},
                {"schedule", {{"type", "probabilistic"}, {"p", 0.5}, {"interval", 20}, {"on", {{"id", 5}}},
                              {"off", "identity"}}}};
    std::ofstream(root / "config.json") << cfg.dump(2);
    const std::vector<std::string> files{"trace.csv", "payoff.csv", "online_11.csv", "online_12.csv",
                                         "weights_11.csv", "weights_12.csv"};
    std::vector<std::string> bodies[2];
    int codes = 0;
    for (int run = 0; run < 2; ++run) {
        const auto out = (root / ("run" + std::to_string(run))).string();
        for (const char* cmd : {"gen", "discover", "adapt"}) {
            codes += run_cli({"--config", (root / "config.json").string(), "--out", out, cmd});
        }
        for (const auto& f : files) bodies[run].push_back(csv_body(fs::path(out) / f));
        bodies[run].push_back(read_file(fs::path(out) / "instance.json").substr(0, read_file(fs::path(out) / "instance.json").find("\"version\"")));
    }
    int identical = 0;
    for (std::size_t i = 0; i < bodies[0].size(); ++i) identical += bodies[0][i] == bodies[1][i] && !bodies[0][i].empty();
    fs::remove_all(root);
    const auto n = static_cast<int>(bodies[0].size());
    return {codes == 0 && identical == n,
            std::to_string(identical) + "/" + std::to_string(n) + " artifacts byte-identical across reruns"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "hardness-instance exactness", 5, hardness},
        {2, "discovery trace invariants", 600, discovery_trace},
        {3, "best-response oracle equivalence", 300, best_response_oracle},
        {4, "matrix-game LP", 60, matrix_games},
        {5, "EXP3 regret bound", 600, exp3_bound},
        {6, "regret decomposition", 60, regret_decomposition},
        {7, "adaptive-attack LP", 60, adaptive_attack},
        {8, "dynamic schedules", 600, dynamic_schedules},
        {9, "reproducibility", 60, reproducibility},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s criterion %d (%s): %s [%.2fs / %.0fs budget]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_seconds);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
