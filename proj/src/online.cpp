#include "advrl/online.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "advrl/csv.hpp"
#include "advrl/game.hpp"

namespace advrl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_attacker(const MixedAttacker& attacker, const PerturbationSet& b, const char* what) {
    for (const auto& m : attacker.support()) {
        if (!m.respects(b)) throw InvalidSchedule(std::string(what) + " attacker violates the perturbation set");
    }
}

// Samples one episode; returns the realized return.
double play_episode(const TabularMdp& mdp, const VictimPolicy& policy, const MixedAttacker& attacker,
                    CounterRng& env, CounterRng& learner) {
    const auto& member = attacker.member(static_cast<std::size_t>(env.discrete(attacker.weights())));
    int s = env.discrete(mdp.initial_dist());
    int node = VictimPolicy::kNone;
    int prev_action = 0;
    std::vector<int> path;
    double total = 0.0;
    for (int h = 0; h < mdp.horizon(); ++h) {
        const int o = member.target(h, s);
        node = h == 0 ? policy.root(o) : policy.child(node, prev_action, o);
        path.push_back(o);
        if (node == VictimPolicy::kNone || !policy.has_decision(node)) {
            throw MissingHistory("policy has no decision at sampled history " + ObservationHistory(path).to_string());
        }
        int a;
        if (policy.kind() == PolicyKind::deterministic) {
            a = policy.action_at(node);
        } else {
            Eigen::VectorXd p(mdp.num_actions());
            for (int i = 0; i < mdp.num_actions(); ++i) p(i) = policy.probability_at(node, i);
            a = learner.discrete(p);
        }
        total += mdp.reward(h, s, a);
        path.push_back(a);
        prev_action = a;
        s = env.discrete(mdp.transition_row(s, a).transpose());
    }
    return total;
}

std::vector<MixedAttacker> resolve_slots(const TabularMdp& mdp, const PerturbationSet& b, const PolicyClass& policies,
                                         const AttackSchedule& schedule, std::size_t attacker_cap,
                                         std::size_t node_cap) {
    return std::visit(
        overloaded{
            [](const StaticSchedule& s) { return std::vector<MixedAttacker>{s.attacker}; },
            [](const PeriodicSchedule& s) { return std::vector<MixedAttacker>{s.on, s.off}; },
            [](const ProbabilisticSchedule& s) { return std::vector<MixedAttacker>{s.on, s.off}; },
            [&](const AdaptiveLpSchedule&) {
                const auto attackers = enumerate_pure_attackers(mdp, b, attacker_cap);
                const auto table = payoff_table(mdp, policies, attackers, node_cap);
                return std::vector<MixedAttacker>{optimal_adaptive_attack(table, attackers).attacker};
            },
        },
        schedule);
}

}  // namespace

void Exp3Config::validate() const {
    if (eta && !(*eta > 0.0 && std::isfinite(*eta))) throw ValidationError("online.eta must be positive");
    if (episodes < 1) throw ValidationError("online.episodes must be positive");
    if (rng_algorithm != CounterRng::kAlgorithm) {
        throw ValidationError("unsupported rng_algorithm '" + rng_algorithm + "'");
    }
    if (snapshot_every < 1) throw ValidationError("online.snapshot_every must be positive");
}

double Exp3Config::resolved_eta(std::size_t num_policies) const {
    if (eta) return *eta;
    const double k = static_cast<double>(num_policies);
    return std::sqrt(std::log(k) / (k * static_cast<double>(episodes)));
}

void validate_schedule(const AttackSchedule& schedule, const PerturbationSet& b) {
    std::visit(overloaded{
                   [&](const StaticSchedule& s) { check_attacker(s.attacker, b, "static"); },
                   [&](const PeriodicSchedule& s) {
                       if (s.period < 1) throw InvalidSchedule("periodic schedule needs period >= 1");
                       if (s.duty < 1 || s.duty > s.period) {
                           throw InvalidSchedule("periodic schedule needs 1 <= duty <= period");
                       }
                       check_attacker(s.on, b, "on");
                       check_attacker(s.off, b, "off");
                   },
                   [&](const ProbabilisticSchedule& s) {
                       if (!(s.switch_probability >= 0.0 && s.switch_probability <= 1.0)) {
                           throw InvalidSchedule("switch probability must lie in [0, 1]");
                       }
                       if (s.interval < 1) throw InvalidSchedule("switching interval must be >= 1");
                       check_attacker(s.on, b, "on");
                       check_attacker(s.off, b, "off");
                   },
                   [](const AdaptiveLpSchedule&) {},
               },
               schedule);
}

ScheduleResolver::ScheduleResolver(const AttackSchedule& schedule, std::uint64_t seed)
    : schedule_(schedule), rng_(seed, Stream::schedule) {}

int ScheduleResolver::resolve(int t) {
    return std::visit(overloaded{
                          [](const StaticSchedule&) { return 0; },
                          [&](const PeriodicSchedule& s) { return (t - 1) % s.period < s.duty ? 0 : 1; },
                          [&](const ProbabilisticSchedule& s) {
                              if (t % s.interval == 0) {
                                  // One draw per opportunity keeps the stream aligned for any p.
                                  if (rng_.uniform() < s.switch_probability) active_ = !active_;
                              }
                              return active_ ? 0 : 1;
                          },
                          [](const AdaptiveLpSchedule&) { return 0; },
                      },
                      schedule_);
}

std::vector<int> schedule_pattern(const AttackSchedule& schedule, int episodes, std::uint64_t seed) {
    ScheduleResolver resolver(schedule, seed);
    std::vector<int> out(static_cast<std::size_t>(episodes));
    for (int t = 1; t <= episodes; ++t) out[static_cast<std::size_t>(t - 1)] = resolver.resolve(t);
    return out;
}

// ---------------------------------------------------------------------------

Exp3Learner::Exp3Learner(std::size_t num_policies, double eta)
    : eta_(eta),
      cumulative_(Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(num_policies))),
      probs_(Eigen::Matrix<long double, Eigen::Dynamic, 1>::Constant(static_cast<Eigen::Index>(num_policies),
                                                                      1.0L / static_cast<long double>(num_policies))),
      weights_(probs_.cast<double>()) {
    if (num_policies == 0) throw ValidationError("EXP3 needs at least one policy");
    if (!(eta >= 0.0)) throw ValidationError("EXP3 learning rate must be non-negative");
}

void Exp3Learner::update(int chosen, double normalized_reward) {
    // An arm whose probability underflowed to zero cannot have been drawn.
    if (!(probs_(chosen) > 0.0L)) return;
    cumulative_(chosen) += static_cast<long double>(normalized_reward) / probs_(chosen);
    // Log-sum-exp: shift by the largest exponent before exponentiating.
    const Eigen::Matrix<long double, Eigen::Dynamic, 1> scaled = static_cast<long double>(eta_) * cumulative_;
    const long double top = scaled.maxCoeff();
    Eigen::Matrix<long double, Eigen::Dynamic, 1> e = (scaled.array() - top).exp();
    probs_ = e / e.sum();
    weights_ = probs_.cast<double>();
}

Eigen::VectorXd importance_weighted_estimate(int chosen, double reward, const Eigen::VectorXd& weights) {
    Eigen::VectorXd est = Eigen::VectorXd::Zero(weights.size());
    est(chosen) = reward / weights(chosen);
    return est;
}

OnlineTrace exp3_adapt(const TabularMdp& mdp, const PerturbationSet& b, const PolicyClass& policies,
                       const AttackSchedule& schedule, const Exp3Config& cfg, std::size_t attacker_cap,
                       std::size_t node_cap) {
    cfg.validate();
    if (policies.empty()) throw ValidationError("online adaptation needs a non-empty policy class");
    validate_schedule(schedule, b);

    OnlineTrace trace;
    trace.slot_attackers = resolve_slots(mdp, b, policies, schedule, attacker_cap, node_cap);
    trace.eta = cfg.resolved_eta(policies.size());
    trace.seed = cfg.seed;
    trace.rng_algorithm = cfg.rng_algorithm;

    const bool recompute =
        std::holds_alternative<AdaptiveLpSchedule>(schedule) && std::get<AdaptiveLpSchedule>(schedule).recompute;

    CounterRng env(cfg.seed, Stream::environment);
    CounterRng learner_rng(cfg.seed, Stream::learner);
    ScheduleResolver resolver(schedule, cfg.seed);
    Exp3Learner learner(policies.size(), trace.eta);
    const double H = static_cast<double>(mdp.horizon());

    long double cumulative = 0.0L;
    trace.episodes.reserve(static_cast<std::size_t>(cfg.episodes));
    for (int t = 1; t <= cfg.episodes; ++t) {
        if ((t - 1) % cfg.snapshot_every == 0) trace.snapshots.push_back({t, learner.weights()});
        const int chosen = learner.draw(learner_rng);
        const int slot = resolver.resolve(t);
        if (recompute && t > 1) {
            trace.slot_attackers[0] = resolve_slots(mdp, b, policies, schedule, attacker_cap, node_cap)[0];
        }
        const double reward = play_episode(mdp, policies[static_cast<std::size_t>(chosen)],
                                           trace.slot_attackers[static_cast<std::size_t>(slot)], env, learner_rng);
        learner.update(chosen, reward / H);
        cumulative += reward;
        trace.episodes.push_back({t, chosen, reward, slot});
    }
    trace.final_weights = learner.weights();
    trace.cumulative_reward = static_cast<double>(cumulative);
    return trace;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd slot_values(const TabularMdp& mdp, const PolicyClass& policies, const OnlineTrace& trace,
                            std::size_t node_cap) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(policies.size()), static_cast<Eigen::Index>(trace.slot_attackers.size()));
    for (std::size_t i = 0; i < policies.size(); ++i) {
        for (std::size_t k = 0; k < trace.slot_attackers.size(); ++k) {
            v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                evaluate(mdp, policies[i], trace.slot_attackers[k], node_cap);
        }
    }
    return v;
}

Eigen::MatrixXd episode_values(const OnlineTrace& trace, const Eigen::MatrixXd& slots) {
    Eigen::MatrixXd v(slots.rows(), static_cast<Eigen::Index>(trace.episodes.size()));
    for (std::size_t t = 0; t < trace.episodes.size(); ++t) {
        const int slot = trace.episodes[t].attacker_slot;
        if (slot < 0 || slot >= slots.cols()) throw ValidationError("trace refers to an unknown attacker slot");
        v.col(static_cast<Eigen::Index>(t)) = slots.col(slot);
    }
    return v;
}

double regret_vs_class(const OnlineTrace& trace, const Eigen::MatrixXd& values) {
    if (values.cols() != static_cast<Eigen::Index>(trace.episodes.size())) {
        throw ValidationError("value table has " + std::to_string(values.cols()) + " episodes, trace has " +
                              std::to_string(trace.episodes.size()));
    }
    Eigen::Matrix<long double, Eigen::Dynamic, 1> totals =
        Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(values.rows());
    long double achieved = 0.0L;
    for (Eigen::Index t = 0; t < values.cols(); ++t) {
        const int chosen = trace.episodes[static_cast<std::size_t>(t)].chosen_policy_id;
        if (chosen < 0 || chosen >= values.rows()) throw ValidationError("trace refers to an unknown policy");
        totals += values.col(t).cast<long double>();
        achieved += values(chosen, t);
    }
    return static_cast<double>(totals.maxCoeff() - achieved);
}

double regret_vs_all(const OnlineTrace& trace, const TabularMdp& mdp, const PolicyClass& policies,
                     std::size_t node_cap) {
    if (trace.episodes.empty()) return 0.0;
    const auto slots = slot_values(mdp, policies, trace, node_cap);
    std::vector<double> counts(trace.slot_attackers.size(), 0.0);
    long double achieved = 0.0L;
    for (const auto& e : trace.episodes) {
        counts[static_cast<std::size_t>(e.attacker_slot)] += 1.0;
        achieved += slots(e.chosen_policy_id, e.attacker_slot);
    }
    const auto average = average_attackers(trace.slot_attackers, counts);
    const long double T = static_cast<long double>(trace.episodes.size());
    return static_cast<double>(T * best_response_value(mdp, average, node_cap) - achieved);
}

RunningRegret running_regrets(const OnlineTrace& trace, const TabularMdp& mdp, const PolicyClass& policies,
                              std::size_t node_cap) {
    const auto slots = slot_values(mdp, policies, trace, node_cap);
    RunningRegret out;
    out.versus_class.reserve(trace.episodes.size());
    out.versus_all.reserve(trace.episodes.size());

    Eigen::Matrix<long double, Eigen::Dynamic, 1> totals =
        Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(slots.rows());
    std::vector<long> counts(trace.slot_attackers.size(), 0);
    std::map<std::vector<long>, double> br_cache;  // keyed by reduced slot counts
    long double achieved = 0.0L;
    long t = 0;
    for (const auto& e : trace.episodes) {
        ++t;
        totals += slots.col(e.attacker_slot).cast<long double>();
        achieved += slots(e.chosen_policy_id, e.attacker_slot);
        counts[static_cast<std::size_t>(e.attacker_slot)] += 1;
        out.versus_class.push_back(static_cast<double>(totals.maxCoeff() - achieved));

        long g = 0;
        for (long c : counts) g = std::gcd(g, c);
        std::vector<long> key(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) key[k] = counts[k] / g;
        auto it = br_cache.find(key);
        if (it == br_cache.end()) {
            std::vector<double> mass(key.begin(), key.end());
            const double v = best_response_value(mdp, average_attackers(trace.slot_attackers, mass), node_cap);
            it = br_cache.emplace(std::move(key), v).first;
        }
        out.versus_all.push_back(static_cast<double>(static_cast<long double>(t) * it->second - achieved));
    }
    return out;
}

double exp3_regret_bound(int horizon, std::size_t num_policies, int episodes) {
    const double k = static_cast<double>(num_policies);
    return 2.0 * horizon * std::sqrt(k * std::log(k) / static_cast<double>(episodes));
}

void write_online_csv(std::ostream& out, const OnlineTrace& trace, const RunningRegret& running) {
    out << "t,chosen_policy_id,attacker_id,reward,regret_tilde_running,regret_full_running\n";
    for (std::size_t i = 0; i < trace.episodes.size(); ++i) {
        const auto& e = trace.episodes[i];
        out << e.t << ',' << e.chosen_policy_id << ',' << e.attacker_slot << ',' << format_double(e.reward) << ','
            << format_double(running.versus_class[i]) << ',' << format_double(running.versus_all[i]) << '\n';
    }
}

void write_weights_csv(std::ostream& out, const OnlineTrace& trace) {
    out << "t,policy_id,weight\n";
    for (const auto& snap : trace.snapshots) {
        for (Eigen::Index i = 0; i < snap.weights.size(); ++i) {
            out << snap.t << ',' << i << ',' << format_double(snap.weights(i)) << '\n';
        }
    }
}

}  // namespace advrl
