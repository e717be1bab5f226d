#include "advrl/eval.hpp"

#include <ostream>
#include <string>

#include "advrl/csv.hpp"
#include "advrl/parallel.hpp"

namespace advrl {

namespace {

// Beliefs are unnormalized reach weights over (support member, true state).
using Belief = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Two action values closer than this are treated as tied.
constexpr long double kTieTolerance = 1e-12L;

class NodeBudget {
public:
    explicit NodeBudget(std::size_t cap) : cap_(cap) {}
    void visit() {
        if (++count_ > cap_) throw CapExceeded("observation-history tree", count_, cap_);
    }

private:
    std::size_t cap_;
    std::size_t count_ = 0;
};

bool has_mass(const Belief& belief) { return belief.size() > 0 && belief.maxCoeff() > 0.0; }

Belief root_belief(const TabularMdp& mdp, const MixedAttacker& attacker) {
    Belief belief(static_cast<Eigen::Index>(attacker.size()), mdp.num_states());
    for (std::size_t m = 0; m < attacker.size(); ++m) {
        belief.row(static_cast<Eigen::Index>(m)) = attacker.weight(m) * mdp.initial_dist().transpose();
    }
    return belief;
}

// Keeps only the mass whose member shows `observed` at step h.
Belief observe(const Belief& pred, const MixedAttacker& attacker, int h, int observed) {
    Belief child = Belief::Zero(pred.rows(), pred.cols());
    for (Eigen::Index m = 0; m < pred.rows(); ++m) {
        const auto& member = attacker.member(static_cast<std::size_t>(m));
        for (Eigen::Index s = 0; s < pred.cols(); ++s) {
            if (pred(m, s) > 0.0 && member.target(h, static_cast<int>(s)) == observed) child(m, s) = pred(m, s);
        }
    }
    return child;
}

// Observations carrying positive mass at step h, ascending.
std::vector<int> observed_set(const Belief& pred, const MixedAttacker& attacker, int h) {
    std::vector<char> seen(static_cast<std::size_t>(pred.cols()), 0);
    for (Eigen::Index m = 0; m < pred.rows(); ++m) {
        const auto& member = attacker.member(static_cast<std::size_t>(m));
        for (Eigen::Index s = 0; s < pred.cols(); ++s) {
            if (pred(m, s) > 0.0) seen[static_cast<std::size_t>(member.target(h, static_cast<int>(s)))] = 1;
        }
    }
    std::vector<int> out;
    for (std::size_t o = 0; o < seen.size(); ++o) {
        if (seen[o]) out.push_back(static_cast<int>(o));
    }
    return out;
}

long double immediate_reward(const TabularMdp& mdp, const Belief& belief, int h, int a) {
    long double total = 0.0L;
    const auto& r = mdp.reward_matrix(h);
    for (Eigen::Index m = 0; m < belief.rows(); ++m) {
        for (Eigen::Index s = 0; s < belief.cols(); ++s) {
            if (belief(m, s) > 0.0) total += static_cast<long double>(belief(m, s)) * r(s, a);
        }
    }
    return total;
}

ObservationHistory history_of(const std::vector<int>& path) { return ObservationHistory(path); }

// ---------------------------------------------------------------------------
// Forward evaluation of several policies against one attacker in a single
// traversal. Each active entry tracks the policy's trie node and the
// probability that the policy's own randomization reached it.

struct ActivePolicy {
    std::size_t index;
    int node;
    long double reach;
};

class ForwardEvaluator {
public:
    ForwardEvaluator(const TabularMdp& mdp, std::span<const VictimPolicy* const> policies,
                     const MixedAttacker& attacker, std::size_t node_cap)
        : mdp_(mdp), policies_(policies), attacker_(attacker), budget_(node_cap),
          values_(policies.size(), 0.0L) {}

    std::vector<long double> run() {
        const Belief root = root_belief(mdp_, attacker_);
        for (int o : observed_set(root, attacker_, 0)) {
            std::vector<ActivePolicy> active;
            path_.assign(1, o);
            for (std::size_t i = 0; i < policies_.size(); ++i) {
                const int node = policies_[i]->root(o);
                if (node == VictimPolicy::kNone) missing(i);
                active.push_back({i, node, 1.0L});
            }
            visit(0, observe(root, attacker_, 0, o), active);
        }
        return values_;
    }

private:
    [[noreturn]] void missing(std::size_t i) const {
        throw MissingHistory("policy " + std::to_string(i) + " has no decision at reachable history " +
                             history_of(path_).to_string());
    }

    void visit(int h, const Belief& belief, const std::vector<ActivePolicy>& active) {
        budget_.visit();
        for (const auto& p : active) {
            if (!policies_[p.index]->has_decision(p.node)) missing(p.index);
        }
        const int H = mdp_.horizon();
        for (int a = 0; a < mdp_.num_actions(); ++a) {
            std::vector<ActivePolicy> taking;
            for (const auto& p : active) {
                const double prob = policies_[p.index]->probability_at(p.node, a);
                if (prob > 0.0) taking.push_back({p.index, p.node, p.reach * prob});
            }
            if (taking.empty()) continue;
            const long double reward = immediate_reward(mdp_, belief, h, a);
            for (const auto& p : taking) values_[p.index] += p.reach * reward;
            if (h + 1 >= H) continue;

            const Belief pred = belief * mdp_.action_kernel(a);
            for (int o : observed_set(pred, attacker_, h + 1)) {
                path_.push_back(a);
                path_.push_back(o);
                std::vector<ActivePolicy> next;
                next.reserve(taking.size());
                for (const auto& p : taking) {
                    const int c = policies_[p.index]->child(p.node, a, o);
                    if (c == VictimPolicy::kNone) missing(p.index);
                    next.push_back({p.index, c, p.reach});
                }
                visit(h + 1, observe(pred, attacker_, h + 1, o), next);
                path_.resize(path_.size() - 2);
            }
        }
    }

    const TabularMdp& mdp_;
    std::span<const VictimPolicy* const> policies_;
    const MixedAttacker& attacker_;
    NodeBudget budget_;
    std::vector<long double> values_;
    std::vector<int> path_;
};

// ---------------------------------------------------------------------------
// Backward induction over belief nodes. With a perturbation set and an
// output policy, the whole structural tree is built (zero-belief subtrees
// included); otherwise only positive-belief nodes are visited.

class BestResponseSolver {
public:
    BestResponseSolver(const TabularMdp& mdp, const PerturbationSet* b, const MixedAttacker& attacker,
                       std::size_t node_cap, VictimPolicy* out)
        : mdp_(mdp), b_(b), attacker_(attacker), budget_(node_cap), out_(out) {}

    long double run() {
        const Belief root = root_belief(mdp_, attacker_);
        long double total = 0.0L;
        if (out_ == nullptr) {
            for (int o : observed_set(root, attacker_, 0)) {
                path_.assign(1, o);
                total += visit(0, observe(root, attacker_, 0, o), {});
            }
            return total;
        }
        std::vector<char> reach(static_cast<std::size_t>(mdp_.num_states()), 0);
        for (int s = 0; s < mdp_.num_states(); ++s) reach[static_cast<std::size_t>(s)] = mdp_.initial_dist()(s) > 0.0;
        for (int o : options(reach)) {
            path_.assign(1, o);
            total += visit(0, observe(root, attacker_, 0, o), consistent(reach, o));
        }
        return total;
    }

private:
    std::vector<int> options(const std::vector<char>& reach) const {
        std::vector<char> seen(reach.size(), 0);
        for (std::size_t s = 0; s < reach.size(); ++s) {
            if (!reach[s]) continue;
            for (int o : b_->allowed(static_cast<int>(s))) seen[static_cast<std::size_t>(o)] = 1;
        }
        std::vector<int> out;
        for (std::size_t o = 0; o < seen.size(); ++o) {
            if (seen[o]) out.push_back(static_cast<int>(o));
        }
        return out;
    }

    std::vector<char> consistent(const std::vector<char>& reach, int o) const {
        std::vector<char> possible(reach.size(), 0);
        for (std::size_t s = 0; s < reach.size(); ++s) {
            possible[s] = reach[s] && b_->contains(static_cast<int>(s), o);
        }
        return possible;
    }

    std::vector<char> successors(const std::vector<char>& possible, int a) const {
        std::vector<char> reach(possible.size(), 0);
        for (std::size_t s = 0; s < possible.size(); ++s) {
            if (!possible[s]) continue;
            auto row = mdp_.transition_row(static_cast<int>(s), a);
            for (Eigen::Index n = 0; n < row.size(); ++n) {
                if (row(n) > 0.0) reach[static_cast<std::size_t>(n)] = 1;
            }
        }
        return reach;
    }

    long double visit(int h, const Belief& belief, const std::vector<char>& possible) {
        budget_.visit();
        const int H = mdp_.horizon();
        const bool any_mass = has_mass(belief);
        long double best_value = 0.0L;
        int best_action = 0;
        for (int a = 0; a < mdp_.num_actions(); ++a) {
            long double q = any_mass ? immediate_reward(mdp_, belief, h, a) : 0.0L;
            if (h + 1 < H) {
                const Belief pred = belief * mdp_.action_kernel(a);
                if (out_ == nullptr) {
                    for (int o : observed_set(pred, attacker_, h + 1)) {
                        path_.push_back(a);
                        path_.push_back(o);
                        q += visit(h + 1, observe(pred, attacker_, h + 1, o), {});
                        path_.resize(path_.size() - 2);
                    }
                } else {
                    const auto reach = successors(possible, a);
                    for (int o : options(reach)) {
                        path_.push_back(a);
                        path_.push_back(o);
                        q += visit(h + 1, observe(pred, attacker_, h + 1, o), consistent(reach, o));
                        path_.resize(path_.size() - 2);
                    }
                }
            }
            if (a == 0 || q > best_value + kTieTolerance) {
                best_value = q;
                best_action = a;
            }
        }
        if (out_ != nullptr) out_->set_action(history_of(path_), best_action);
        return best_value;
    }

    const TabularMdp& mdp_;
    const PerturbationSet* b_;
    const MixedAttacker& attacker_;
    NodeBudget budget_;
    VictimPolicy* out_;
    std::vector<int> path_;
};

void check_attacker_shape(const TabularMdp& mdp, const MixedAttacker& attacker) {
    const auto& m = attacker.member(0);
    if (m.horizon() != mdp.horizon() || m.num_states() != mdp.num_states()) {
        throw ValidationError("attacker shape does not match the MDP");
    }
}

void check_policy_shape(const TabularMdp& mdp, const VictimPolicy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() ||
        policy.horizon() != mdp.horizon()) {
        throw ValidationError("policy shape does not match the MDP");
    }
}

template <typename Visit>
void walk_structure(const TabularMdp& mdp, const PerturbationSet& b, std::size_t node_cap, Visit&& visit) {
    if (b.num_states() != mdp.num_states()) throw ValidationError("perturbation set does not match MDP");
    NodeBudget budget(node_cap);
    const int S = mdp.num_states();
    auto options = [&](const std::vector<char>& reach) {
        std::vector<char> seen(reach.size(), 0);
        for (int s = 0; s < S; ++s) {
            if (!reach[static_cast<std::size_t>(s)]) continue;
            for (int o : b.allowed(s)) seen[static_cast<std::size_t>(o)] = 1;
        }
        return seen;
    };
    std::vector<int> path;
    auto rec = [&](auto&& self, int h, const std::vector<char>& reach) -> void {
        const auto seen = options(reach);
        for (int o = 0; o < S; ++o) {
            if (!seen[static_cast<std::size_t>(o)]) continue;
            budget.visit();
            path.push_back(o);
            visit(ObservationHistory(path), h);
            if (h + 1 < mdp.horizon()) {
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    std::vector<char> next(static_cast<std::size_t>(S), 0);
                    for (int s = 0; s < S; ++s) {
                        if (!reach[static_cast<std::size_t>(s)] || !b.contains(s, o)) continue;
                        for (int n = 0; n < S; ++n) {
                            if (mdp.transition(s, a, n) > 0.0) next[static_cast<std::size_t>(n)] = 1;
                        }
                    }
                    path.push_back(a);
                    self(self, h + 1, next);
                    path.pop_back();
                }
            }
            path.pop_back();
        }
    };
    std::vector<char> reach(static_cast<std::size_t>(S), 0);
    for (int s = 0; s < S; ++s) reach[static_cast<std::size_t>(s)] = mdp.initial_dist()(s) > 0.0;
    rec(rec, 0, reach);
}

}  // namespace

double evaluate(const TabularMdp& mdp, const VictimPolicy& policy, const MixedAttacker& attacker,
                std::size_t node_cap) {
    check_attacker_shape(mdp, attacker);
    check_policy_shape(mdp, policy);
    const VictimPolicy* ptr = &policy;
    ForwardEvaluator eval(mdp, std::span<const VictimPolicy* const>(&ptr, 1), attacker, node_cap);
    return static_cast<double>(eval.run()[0]);
}

double evaluate(const TabularMdp& mdp, const VictimPolicy& policy, const PureAttacker& attacker,
                std::size_t node_cap) {
    return evaluate(mdp, policy, MixedAttacker::pure(attacker), node_cap);
}

BestResponse best_response(const TabularMdp& mdp, const PerturbationSet& b, const MixedAttacker& attacker,
                           std::size_t node_cap) {
    check_attacker_shape(mdp, attacker);
    if (b.num_states() != mdp.num_states()) throw ValidationError("perturbation set does not match MDP");
    VictimPolicy policy(PolicyKind::deterministic, mdp.num_states(), mdp.num_actions(), mdp.horizon());
    BestResponseSolver solver(mdp, &b, attacker, node_cap, &policy);
    const double value = static_cast<double>(solver.run());
    return {std::move(policy), value};
}

double best_response_value(const TabularMdp& mdp, const MixedAttacker& attacker, std::size_t node_cap) {
    check_attacker_shape(mdp, attacker);
    BestResponseSolver solver(mdp, nullptr, attacker, node_cap, nullptr);
    return static_cast<double>(solver.run());
}

std::vector<double> best_response_values(const TabularMdp& mdp, std::span<const PureAttacker> attackers,
                                         std::size_t node_cap, unsigned threads) {
    std::vector<double> values(attackers.size(), 0.0);
    parallel_for(attackers.size(), threads, [&](std::size_t j) {
        values[j] = best_response_value(mdp, MixedAttacker::pure(attackers[j]), node_cap);
    });
    return values;
}

std::vector<ObservationHistory> observation_histories(const TabularMdp& mdp, const PerturbationSet& b,
                                                      std::size_t node_cap) {
    std::vector<ObservationHistory> out;
    walk_structure(mdp, b, node_cap, [&](const ObservationHistory& h, int) { out.push_back(h); });
    return out;
}

VictimPolicy open_loop_policy(const TabularMdp& mdp, const PerturbationSet& b, std::span<const int> actions,
                              std::size_t node_cap) {
    if (static_cast<int>(actions.size()) != mdp.horizon()) {
        throw ValidationError("open-loop policy needs one action per step");
    }
    VictimPolicy policy(PolicyKind::deterministic, mdp.num_states(), mdp.num_actions(), mdp.horizon());
    walk_structure(mdp, b, node_cap, [&](const ObservationHistory& hist, int h) {
        policy.set_action(hist, actions[static_cast<std::size_t>(h)]);
    });
    return policy;
}

VictimPolicy observation_markov_policy(const TabularMdp& mdp, const PerturbationSet& b,
                                       const Eigen::MatrixXi& actions, std::size_t node_cap) {
    if (actions.rows() != mdp.horizon() || actions.cols() != mdp.num_states()) {
        throw ValidationError("observation-Markov policy table must be H x S");
    }
    VictimPolicy policy(PolicyKind::deterministic, mdp.num_states(), mdp.num_actions(), mdp.horizon());
    walk_structure(mdp, b, node_cap, [&](const ObservationHistory& hist, int h) {
        policy.set_action(hist, actions(h, hist.last_observation()));
    });
    return policy;
}

PayoffTable payoff_table(const TabularMdp& mdp, const PolicyClass& policies,
                         std::span<const PureAttacker> attackers, std::size_t node_cap, unsigned threads) {
    std::vector<const VictimPolicy*> ptrs;
    for (const auto& p : policies.policies()) {
        check_policy_shape(mdp, p);
        ptrs.push_back(&p);
    }
    PayoffTable table(static_cast<Eigen::Index>(ptrs.size()), static_cast<Eigen::Index>(attackers.size()));
    if (ptrs.empty() || attackers.empty()) return table;
    parallel_for(attackers.size(), threads, [&](std::size_t j) {
        const auto attacker = MixedAttacker::pure(attackers[j]);
        check_attacker_shape(mdp, attacker);
        try {
            ForwardEvaluator eval(mdp, ptrs, attacker, node_cap);
            const auto column = eval.run();
            for (std::size_t i = 0; i < column.size(); ++i) {
                table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(column[i]);
            }
        } catch (const MissingHistory& e) {
            throw MissingHistory(std::string(e.what()) + " (attacker " + std::to_string(j) + ")");
        }
    });
    return table;
}

Eigen::RowVectorXd payoff_row(const TabularMdp& mdp, const VictimPolicy& policy,
                              std::span<const PureAttacker> attackers, std::size_t node_cap, unsigned threads) {
    PolicyClass single;
    single.add(policy);
    return payoff_table(mdp, single, attackers, node_cap, threads).row(0);
}

void write_payoff_csv(std::ostream& out, const PayoffTable& table) {
    out << "policy_id,attacker_id,value\n";
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
            out << i << ',' << j << ',' << format_double(table(i, j)) << '\n';
        }
    }
}

}  // namespace advrl
