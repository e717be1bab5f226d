#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "advrl/eval.hpp"
#include "advrl/mdp.hpp"
#include "advrl/rng.hpp"

namespace advrl {

struct Exp3Config {
    std::optional<double> eta;  // empty means auto: sqrt(ln K / (K T))
    int episodes = 1000;
    std::uint64_t seed = 0;
    std::string rng_algorithm{CounterRng::kAlgorithm};
    int snapshot_every = 10;

    void validate() const;
    double resolved_eta(std::size_t num_policies) const;
};

// Attack schedules. Slot 0 is the active ("on") attacker, slot 1 the
// inactive ("off") one; static and adaptive schedules only use slot 0.
struct StaticSchedule {
    MixedAttacker attacker;
};

struct PeriodicSchedule {
    int period;
    int duty;  // first `duty` episodes of every period are attacked
    MixedAttacker on;
    MixedAttacker off;
};

struct ProbabilisticSchedule {
    double switch_probability;
    int interval = 50;  // switching opportunities at t = L, 2L, ...
    MixedAttacker on;
    MixedAttacker off;
};

struct AdaptiveLpSchedule {
    bool recompute = false;
};

using AttackSchedule = std::variant<StaticSchedule, PeriodicSchedule, ProbabilisticSchedule, AdaptiveLpSchedule>;

/// Throws InvalidSchedule on bad parameters or attackers outside B.
void validate_schedule(const AttackSchedule& schedule, const PerturbationSet& b);

/// Resolves the active slot episode by episode; t must be visited in order 1, 2, ...
class ScheduleResolver {
public:
    ScheduleResolver(const AttackSchedule& schedule, std::uint64_t seed);

    int resolve(int t);

private:
    const AttackSchedule& schedule_;
    CounterRng rng_;
    bool active_ = false;
};

/// Slot used in each of the episodes 1..T.
std::vector<int> schedule_pattern(const AttackSchedule& schedule, int episodes, std::uint64_t seed);

/**
 * Exponential weights over a finite class with importance-weighted reward
 * estimates: w(pi) proportional to exp(eta * sum_s R^s(pi) / w^s(pi) 1{pi = pi^s}).
 * Rewards passed to update() must already be normalized into [0, 1]. There
 * is no explicit exploration mixing.
 */
class Exp3Learner {
public:
    Exp3Learner(std::size_t num_policies, double eta);

    const Eigen::VectorXd& weights() const { return weights_; }
    int draw(CounterRng& rng) const { return rng.discrete(weights_); }
    void update(int chosen, double normalized_reward);

private:
    double eta_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> cumulative_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> probs_;
    Eigen::VectorXd weights_;
};

/// R-hat vector for one round: reward / weight on the chosen arm, 0 elsewhere.
Eigen::VectorXd importance_weighted_estimate(int chosen, double reward, const Eigen::VectorXd& weights);

struct EpisodeRecord {
    int t;
    int chosen_policy_id;
    double reward;  // realized return in [0, H]
    int attacker_slot;
};

struct WeightSnapshot {
    int t;
    Eigen::VectorXd weights;  // meta-policy used in episode t
};

struct OnlineTrace {
    std::vector<EpisodeRecord> episodes;
    std::vector<WeightSnapshot> snapshots;
    std::vector<MixedAttacker> slot_attackers;
    Eigen::VectorXd final_weights;
    double eta = 0.0;
    std::uint64_t seed = 0;
    std::string rng_algorithm;
    double cumulative_reward = 0.0;
};

/**
 * Runs T episodes of online adaptation: sample a policy from the meta
 * policy, resolve the attacker, play one sampled trajectory, update with
 * the return divided by H. Bit-reproducible for a given seed.
 */
OnlineTrace exp3_adapt(const TabularMdp& mdp, const PerturbationSet& b, const PolicyClass& policies,
                       const AttackSchedule& schedule, const Exp3Config& cfg,
                       std::size_t attacker_cap = kDefaultAttackerCap, std::size_t node_cap = kDefaultNodeCap);

/// K x slots matrix of exact values J(pi_i, slot attacker).
Eigen::MatrixXd slot_values(const TabularMdp& mdp, const PolicyClass& policies, const OnlineTrace& trace,
                            std::size_t node_cap = kDefaultNodeCap);

/// K x T matrix of J(pi_i, nu^t) for every episode.
Eigen::MatrixXd episode_values(const OnlineTrace& trace, const Eigen::MatrixXd& slot_values);

/// max_i sum_t (J(pi_i, nu^t) - J(pi^t, nu^t)) from exact values (K x T).
double regret_vs_class(const OnlineTrace& trace, const Eigen::MatrixXd& values);

/// max over all policies of sum_t J(pi, nu^t) - sum_t J(pi^t, nu^t), via one
/// best response against the average attacker.
double regret_vs_all(const OnlineTrace& trace, const TabularMdp& mdp, const PolicyClass& policies,
                     std::size_t node_cap = kDefaultNodeCap);

struct RunningRegret {
    std::vector<double> versus_class;
    std::vector<double> versus_all;
};

/// Both regrets after every prefix 1..t of the trace.
RunningRegret running_regrets(const OnlineTrace& trace, const TabularMdp& mdp, const PolicyClass& policies,
                              std::size_t node_cap = kDefaultNodeCap);

/// 2 H sqrt(K ln K / T).
double exp3_regret_bound(int horizon, std::size_t num_policies, int episodes);

/// CSV `t,chosen_policy_id,attacker_id,reward,regret_tilde_running,regret_full_running`.
void write_online_csv(std::ostream& out, const OnlineTrace& trace, const RunningRegret& running);

/// CSV `t,policy_id,weight`.
void write_weights_csv(std::ostream& out, const OnlineTrace& trace);

}  // namespace advrl
