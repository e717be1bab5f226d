#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "advrl/errors.hpp"

namespace advrl {

// Probability vectors must sum to one within this tolerance.
inline constexpr double kProbabilityTolerance = 1e-12;

inline constexpr std::size_t kDefaultAttackerCap = 100000;
inline constexpr std::size_t kDefaultNodeCap = 1000000;

/**
 * Finite-horizon tabular MDP with a stationary transition kernel and
 * per-step rewards.
 *
 * Transitions are stored as an (S*A) x S matrix whose row s*A + a is the
 * distribution of the next state. Rewards are one S x A matrix per step.
 * The constructor only checks shapes; value invariants are reported by
 * validate_mdp().
 */
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions, int horizon, Eigen::MatrixXd transition,
               Eigen::VectorXd initial_dist, std::vector<Eigen::MatrixXd> reward);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }

    double transition(int s, int a, int next) const { return transition_(s * num_actions_ + a, next); }
    auto transition_row(int s, int a) const { return transition_.row(s * num_actions_ + a); }
    const Eigen::MatrixXd& transition_matrix() const { return transition_; }

    /// S x S kernel of a single action: entry (s, s') = T(s' | s, a).
    const Eigen::MatrixXd& action_kernel(int a) const { return kernels_[a]; }

    const Eigen::VectorXd& initial_dist() const { return initial_; }

    double reward(int h, int s, int a) const { return reward_[h](s, a); }
    const Eigen::MatrixXd& reward_matrix(int h) const { return reward_[h]; }

    bool operator==(const TabularMdp& other) const;

private:
    int num_states_;
    int num_actions_;
    int horizon_;
    Eigen::MatrixXd transition_;
    Eigen::VectorXd initial_;
    std::vector<Eigen::MatrixXd> reward_;
    std::vector<Eigen::MatrixXd> kernels_;
};

struct ValidationIssue {
    std::string location;  // e.g. "transition[0][1]"
    std::string message;
};

/// Every violated invariant of `mdp`; an empty report means the instance is valid.
std::vector<ValidationIssue> validate_mdp(const TabularMdp& mdp);

/**
 * Per-state sets B(s) of observations the attacker may substitute for s.
 * Stored canonically: ascending, duplicate-free, non-empty.
 */
class PerturbationSet {
public:
    /// Sorts each B(s); throws ValidationError on empty sets, out-of-range or
    /// duplicate entries, or a missing identity when `include_identity` is set.
    PerturbationSet(int num_states, std::vector<std::vector<int>> allowed, bool include_identity);

    static PerturbationSet identity(int num_states);
    static PerturbationSet full(int num_states);

    int num_states() const { return static_cast<int>(allowed_.size()); }
    std::span<const int> allowed(int s) const { return allowed_[s]; }
    bool contains(int s, int observed) const;
    bool include_identity() const { return include_identity_; }

    bool operator==(const PerturbationSet&) const = default;

private:
    std::vector<std::vector<int>> allowed_;
    bool include_identity_;
};

/// Deterministic attacker: the observation shown at step h when the true state is s.
class PureAttacker {
public:
    PureAttacker(int horizon, int num_states, std::vector<int> targets);

    static PureAttacker identity(int horizon, int num_states);
    static PureAttacker constant(int horizon, int num_states, int observed);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int target(int h, int s) const { return targets_[static_cast<std::size_t>(h * num_states_ + s)]; }
    const std::vector<int>& targets() const { return targets_; }

    bool respects(const PerturbationSet& b) const;

    auto operator<=>(const PureAttacker&) const = default;

private:
    int horizon_;
    int num_states_;
    std::vector<int> targets_;
};

/// Distribution over pure attackers, drawn once per episode.
class MixedAttacker {
public:
    MixedAttacker(std::vector<PureAttacker> support, Eigen::VectorXd weights);

    static MixedAttacker pure(PureAttacker attacker);

    std::size_t size() const { return support_.size(); }
    const std::vector<PureAttacker>& support() const { return support_; }
    const PureAttacker& member(std::size_t m) const { return support_[m]; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double weight(std::size_t m) const { return weights_(static_cast<Eigen::Index>(m)); }

private:
    std::vector<PureAttacker> support_;
    Eigen::VectorXd weights_;
};

/// Uniform (count-weighted) average of several mixed attackers, merging equal members.
MixedAttacker average_attackers(std::span<const MixedAttacker> attackers, std::span<const double> mass);

std::size_t count_pure_attackers(const TabularMdp& mdp, const PerturbationSet& b);

/**
 * All pure attackers respecting `b`, in canonical order: lexicographic over
 * the sequence (nu[0][0], nu[0][1], ..., nu[H-1][S-1]) of positions within
 * B(s). The index of an attacker in this list is its attacker id.
 */
std::vector<PureAttacker> enumerate_pure_attackers(const TabularMdp& mdp, const PerturbationSet& b,
                                                   std::size_t cap = kDefaultAttackerCap);

/// Inverse of enumerate_pure_attackers().
std::size_t canonical_attacker_id(const PureAttacker& attacker, const PerturbationSet& b);

/// Alternating perturbed states and actions (s^_1, a_1, ..., s^_h), ending in a state.
class ObservationHistory {
public:
    ObservationHistory() = default;
    explicit ObservationHistory(std::vector<int> entries);

    /// 1-based step of the last observation; 0 for the empty history.
    int step() const { return static_cast<int>((entries_.size() + 1) / 2); }
    bool empty() const { return entries_.empty(); }
    const std::vector<int>& entries() const { return entries_; }
    int observation(int h) const { return entries_[static_cast<std::size_t>(2 * h)]; }
    int action(int h) const { return entries_[static_cast<std::size_t>(2 * h + 1)]; }
    int last_observation() const { return entries_.back(); }

    ObservationHistory extended(int action, int observation) const;

    bool valid_for(int num_states, int num_actions, int horizon) const;
    std::string to_string() const;

    auto operator<=>(const ObservationHistory&) const = default;

private:
    std::vector<int> entries_;
};

enum class PolicyKind { deterministic, stochastic };

/**
 * History-dependent victim policy stored as a trie over observation
 * histories. Nodes are addressed by integer handles; root(o) is the node
 * for the one-step history (o). Looking up a history without a decision
 * raises MissingHistory.
 */
class VictimPolicy {
public:
    static constexpr int kNone = -1;

    VictimPolicy(PolicyKind kind, int num_states, int num_actions, int horizon);

    PolicyKind kind() const { return kind_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t decision_count() const;

    void set_action(const ObservationHistory& history, int action);
    void set_distribution(const ObservationHistory& history, const Eigen::VectorXd& probs);

    // Handle-based navigation; kNone when absent.
    int root(int observation) const { return roots_[static_cast<std::size_t>(observation)]; }
    int child(int node, int action, int observation) const {
        return nodes_[static_cast<std::size_t>(node)]
            .children[static_cast<std::size_t>(action * num_states_ + observation)];
    }
    bool has_decision(int node) const { return nodes_[static_cast<std::size_t>(node)].defined; }
    /// Action of a deterministic node.
    int action_at(int node) const;
    /// Probability of `action` at a node; deterministic nodes give 0 or 1.
    double probability_at(int node, int action) const;

    std::optional<int> find(const ObservationHistory& history) const;
    /// Decision as a probability vector; throws MissingHistory if undefined.
    Eigen::VectorXd decision(const ObservationHistory& history) const;

    /// Visits every node carrying a decision, in depth-first order of
    /// ascending (action, observation).
    template <typename Visitor>
    void for_each_decision(Visitor&& visit) const {
        for (int o = 0; o < num_states_; ++o) {
            if (roots_[static_cast<std::size_t>(o)] != kNone) {
                walk(roots_[static_cast<std::size_t>(o)], ObservationHistory({o}), visit);
            }
        }
    }

    bool operator==(const VictimPolicy& other) const;

private:
    struct Node {
        bool defined = false;
        int action = kNone;
        std::vector<double> probs;
        std::vector<int> children;
    };

    int ensure_path(const ObservationHistory& history);

    template <typename Visitor>
    void walk(int node, const ObservationHistory& history, Visitor& visit) const {
        if (nodes_[static_cast<std::size_t>(node)].defined) visit(history, node);
        for (int a = 0; a < num_actions_; ++a) {
            for (int o = 0; o < num_states_; ++o) {
                int c = child(node, a, o);
                if (c != kNone) walk(c, history.extended(a, o), visit);
            }
        }
    }

    PolicyKind kind_;
    int num_states_;
    int num_actions_;
    int horizon_;
    std::vector<int> roots_;
    std::vector<Node> nodes_;
};

struct Provenance {
    int iteration = -1;    // discovery iteration (1-based), -1 when supplied externally
    int attacker_id = -1;  // attacker whose best response produced the policy
};

/// Ordered finite victim class; a policy's id is its position.
class PolicyClass {
public:
    int add(VictimPolicy policy, Provenance provenance = {});

    std::size_t size() const { return policies_.size(); }
    bool empty() const { return policies_.empty(); }
    const VictimPolicy& operator[](std::size_t id) const { return policies_[id]; }
    const std::vector<VictimPolicy>& policies() const { return policies_; }
    const Provenance& provenance(std::size_t id) const { return provenance_[id]; }

    /// New class holding the listed ids in the given order, renumbered densely.
    PolicyClass subset(std::span<const int> ids) const;

private:
    std::vector<VictimPolicy> policies_;
    std::vector<Provenance> provenance_;
};

/// Probability vector over the ids of a PolicyClass.
class MetaPolicy {
public:
    explicit MetaPolicy(Eigen::VectorXd weights);
    static MetaPolicy uniform(std::size_t size);

    std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    Eigen::VectorXd weights_;
};

/// Throws ValidationError unless `v` is a probability vector within `tolerance`.
void check_simplex(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what,
                   double tolerance = kProbabilityTolerance);

}  // namespace advrl
