#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "advrl/mdp.hpp"

namespace advrl {

/// J(pi, nu_j) for every policy i (rows, id order) and attacker j (columns, canonical order).
using PayoffTable = Eigen::MatrixXd;

/**
 * Exact value J(policy, attacker): expected total reward over the seed of
 * the mixed attacker, the true-state trajectory and the policy's own
 * randomization. Computed by a forward pass over the observation histories
 * reachable with positive probability, carrying unnormalized beliefs over
 * (support member, true state).
 *
 * Throws MissingHistory if the policy has no decision at a reachable
 * history and CapExceeded if more than `node_cap` histories are visited.
 */
double evaluate(const TabularMdp& mdp, const VictimPolicy& policy, const MixedAttacker& attacker,
                std::size_t node_cap = kDefaultNodeCap);

double evaluate(const TabularMdp& mdp, const VictimPolicy& policy, const PureAttacker& attacker,
                std::size_t node_cap = kDefaultNodeCap);

struct BestResponse {
    VictimPolicy policy;
    double value;
};

/**
 * Deterministic best response to `attacker` by backward induction over
 * belief nodes. The returned tree covers every observation history that any
 * attacker respecting `b` can produce, so it can be evaluated against all
 * of V^det; nodes the given attacker never reaches get action 0. Ties go to
 * the lowest action index.
 */
BestResponse best_response(const TabularMdp& mdp, const PerturbationSet& b, const MixedAttacker& attacker,
                           std::size_t node_cap = kDefaultNodeCap);

/// Same value as best_response() without materializing the policy.
double best_response_value(const TabularMdp& mdp, const MixedAttacker& attacker,
                           std::size_t node_cap = kDefaultNodeCap);

/// Best-response value for each pure attacker; `threads` > 1 splits the columns.
std::vector<double> best_response_values(const TabularMdp& mdp, std::span<const PureAttacker> attackers,
                                         std::size_t node_cap = kDefaultNodeCap, unsigned threads = 1);

/// All observation histories some attacker respecting `b` can produce, in depth-first order.
std::vector<ObservationHistory> observation_histories(const TabularMdp& mdp, const PerturbationSet& b,
                                                      std::size_t node_cap = kDefaultNodeCap);

/// Policy that plays `actions[h]` at step h whatever it observes.
VictimPolicy open_loop_policy(const TabularMdp& mdp, const PerturbationSet& b, std::span<const int> actions,
                              std::size_t node_cap = kDefaultNodeCap);

/// Policy that plays `actions(h, o)` on observing o at step h (H x S table).
VictimPolicy observation_markov_policy(const TabularMdp& mdp, const PerturbationSet& b,
                                       const Eigen::MatrixXi& actions, std::size_t node_cap = kDefaultNodeCap);

/// One row of the payoff table: J(policy, nu_j) for each attacker.
Eigen::RowVectorXd payoff_row(const TabularMdp& mdp, const VictimPolicy& policy,
                              std::span<const PureAttacker> attackers, std::size_t node_cap = kDefaultNodeCap,
                              unsigned threads = 1);

/**
 * Exact payoff table. Each attacker column is filled by one traversal shared
 * by all policies. Errors carry the (policy, attacker) cell.
 */
PayoffTable payoff_table(const TabularMdp& mdp, const PolicyClass& policies,
                         std::span<const PureAttacker> attackers, std::size_t node_cap = kDefaultNodeCap,
                         unsigned threads = 1);

/// CSV `policy_id,attacker_id,value`, 17 significant digits.
void write_payoff_csv(std::ostream& out, const PayoffTable& table);

}  // namespace advrl
