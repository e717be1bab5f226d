#include "advrl/mdp.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace advrl {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon, Eigen::MatrixXd transition,
                       Eigen::VectorXd initial_dist, std::vector<Eigen::MatrixXd> reward)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      transition_(std::move(transition)),
      initial_(std::move(initial_dist)),
      reward_(std::move(reward)) {
    if (num_states_ < 1 || num_actions_ < 1 || horizon_ < 1) {
        throw ValidationError("num_states, num_actions and horizon must be positive");
    }
    if (transition_.rows() != num_states_ * num_actions_ || transition_.cols() != num_states_) {
        throw ValidationError("transition must have S*A rows and S columns");
    }
    if (initial_.size() != num_states_) throw ValidationError("initial_dist must have S entries");
    if (static_cast<int>(reward_.size()) != horizon_) throw ValidationError("reward must have H slices");
    for (const auto& r : reward_) {
        if (r.rows() != num_states_ || r.cols() != num_actions_) {
            throw ValidationError("each reward slice must be S x A");
        }
    }
    kernels_.reserve(static_cast<std::size_t>(num_actions_));
    for (int a = 0; a < num_actions_; ++a) {
        Eigen::MatrixXd k(num_states_, num_states_);
        for (int s = 0; s < num_states_; ++s) k.row(s) = transition_row(s, a);
        kernels_.push_back(std::move(k));
    }
}

bool TabularMdp::operator==(const TabularMdp& other) const {
    if (num_states_ != other.num_states_ || num_actions_ != other.num_actions_ ||
        horizon_ != other.horizon_) {
        return false;
    }
    if (transition_ != other.transition_ || initial_ != other.initial_) return false;
    for (int h = 0; h < horizon_; ++h) {
        if (reward_[h] != other.reward_[h]) return false;
    }
    return true;
}

std::vector<ValidationIssue> validate_mdp(const TabularMdp& mdp) {
    std::vector<ValidationIssue> report;
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const std::string where = "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]";
            auto row = mdp.transition_row(s, a);
            if (!row.allFinite()) {
                report.push_back({where, "non-finite probability"});
                continue;
            }
            for (int n = 0; n < S; ++n) {
                if (row(n) < 0.0) {
                    report.push_back({where + "[" + std::to_string(n) + "]",
                                      "negative probability " + fmt_double(row(n))});
                }
            }
            const double sum = row.sum();
            if (std::abs(sum - 1.0) > kProbabilityTolerance) {
                report.push_back({where, "row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                             ") sums to " + fmt_double(sum) + " (deficit " +
                                             fmt_double(1.0 - sum) + ")"});
            }
        }
    }
    const auto& mu = mdp.initial_dist();
    if (!mu.allFinite()) {
        report.push_back({"initial_dist", "non-finite probability"});
    } else {
        for (int s = 0; s < S; ++s) {
            if (mu(s) < 0.0) {
                report.push_back({"initial_dist[" + std::to_string(s) + "]",
                                  "negative probability " + fmt_double(mu(s))});
            }
        }
        if (std::abs(mu.sum() - 1.0) > kProbabilityTolerance) {
            report.push_back({"initial_dist", "sums to " + fmt_double(mu.sum()) + " (deficit " +
                                                  fmt_double(1.0 - mu.sum()) + ")"});
        }
    }
    for (int h = 0; h < mdp.horizon(); ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double r = mdp.reward(h, s, a);
                if (!(r >= 0.0 && r <= 1.0)) {
                    const std::string hsa =
                        std::to_string(h) + "," + std::to_string(s) + "," + std::to_string(a);
                    report.push_back({"reward[" + std::to_string(h) + "][" + std::to_string(s) + "][" +
                                          std::to_string(a) + "]",
                                      "reward out of [0,1] at (" + hsa + "): " + fmt_double(r)});
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

PerturbationSet::PerturbationSet(int num_states, std::vector<std::vector<int>> allowed,
                                 bool include_identity)
    : allowed_(std::move(allowed)), include_identity_(include_identity) {
    if (num_states < 1) throw ValidationError("perturbation set needs at least one state");
    if (static_cast<int>(allowed_.size()) != num_states) {
        throw ValidationError("perturbation.allowed must have one entry per state");
    }
    for (int s = 0; s < num_states; ++s) {
        auto& set = allowed_[static_cast<std::size_t>(s)];
        const std::string where = "perturbation.allowed[" + std::to_string(s) + "]";
        if (set.empty()) throw ValidationError(where + " is empty");
        for (int o : set) {
            if (o < 0 || o >= num_states) {
                throw ValidationError(where + " contains out-of-range state " + std::to_string(o));
            }
        }
        std::sort(set.begin(), set.end());
        if (std::adjacent_find(set.begin(), set.end()) != set.end()) {
            throw ValidationError(where + " contains duplicates");
        }
        if (include_identity_ && !std::binary_search(set.begin(), set.end(), s)) {
            throw ValidationError(where + " does not contain its own state");
        }
    }
}

PerturbationSet PerturbationSet::identity(int num_states) {
    std::vector<std::vector<int>> allowed(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s) allowed[static_cast<std::size_t>(s)] = {s};
    return PerturbationSet(num_states, std::move(allowed), true);
}

PerturbationSet PerturbationSet::full(int num_states) {
    std::vector<int> all(static_cast<std::size_t>(num_states));
    std::iota(all.begin(), all.end(), 0);
    return PerturbationSet(num_states, std::vector<std::vector<int>>(all.size(), all), true);
}

bool PerturbationSet::contains(int s, int observed) const {
    const auto& set = allowed_[static_cast<std::size_t>(s)];
    return std::binary_search(set.begin(), set.end(), observed);
}

// ---------------------------------------------------------------------------

PureAttacker::PureAttacker(int horizon, int num_states, std::vector<int> targets)
    : horizon_(horizon), num_states_(num_states), targets_(std::move(targets)) {
    if (static_cast<int>(targets_.size()) != horizon_ * num_states_) {
        throw ValidationError("pure attacker map must have H*S entries");
    }
    for (int t : targets_) {
        if (t < 0 || t >= num_states_) throw ValidationError("pure attacker target out of range");
    }
}

PureAttacker PureAttacker::identity(int horizon, int num_states) {
    std::vector<int> t(static_cast<std::size_t>(horizon * num_states));
    for (int h = 0; h < horizon; ++h) {
        for (int s = 0; s < num_states; ++s) t[static_cast<std::size_t>(h * num_states + s)] = s;
    }
    return PureAttacker(horizon, num_states, std::move(t));
}

PureAttacker PureAttacker::constant(int horizon, int num_states, int observed) {
    return PureAttacker(horizon, num_states,
                        std::vector<int>(static_cast<std::size_t>(horizon * num_states), observed));
}

bool PureAttacker::respects(const PerturbationSet& b) const {
    if (b.num_states() != num_states_) return false;
    for (int h = 0; h < horizon_; ++h) {
        for (int s = 0; s < num_states_; ++s) {
            if (!b.contains(s, target(h, s))) return false;
        }
    }
    return true;
}

void check_simplex(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what, double tolerance) {
    if (v.size() == 0) throw ValidationError(what + " is empty");
    if (!v.allFinite()) throw ValidationError(what + " has non-finite entries");
    if (v.minCoeff() < 0.0) throw ValidationError(what + " has negative entries");
    if (std::abs(v.sum() - 1.0) > tolerance) {
        throw ValidationError(what + " sums to " + fmt_double(v.sum()) + ", expected 1");
    }
}

MixedAttacker::MixedAttacker(std::vector<PureAttacker> support, Eigen::VectorXd weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty()) throw ValidationError("mixed attacker needs a non-empty support");
    if (weights_.size() != static_cast<Eigen::Index>(support_.size())) {
        throw ValidationError("mixed attacker weights must match its support");
    }
    check_simplex(weights_, "mixed attacker weights");
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (support_[i].horizon() != support_[0].horizon() ||
            support_[i].num_states() != support_[0].num_states()) {
            throw ValidationError("mixed attacker members disagree on shape");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (support_[i] == support_[j]) throw ValidationError("mixed attacker support has duplicates");
        }
    }
}

MixedAttacker MixedAttacker::pure(PureAttacker attacker) {
    std::vector<PureAttacker> support;
    support.push_back(std::move(attacker));
    return MixedAttacker(std::move(support), Eigen::VectorXd::Ones(1));
}

MixedAttacker average_attackers(std::span<const MixedAttacker> attackers, std::span<const double> mass) {
    if (attackers.empty() || attackers.size() != mass.size()) {
        throw ValidationError("average_attackers needs one mass per attacker");
    }
    std::map<PureAttacker, long double> merged;
    long double total = 0.0L;
    for (std::size_t i = 0; i < attackers.size(); ++i) {
        if (mass[i] < 0.0) throw ValidationError("average_attackers mass must be non-negative");
        total += mass[i];
        for (std::size_t m = 0; m < attackers[i].size(); ++m) {
            merged[attackers[i].member(m)] += static_cast<long double>(mass[i]) * attackers[i].weight(m);
        }
    }
    if (total <= 0.0L) throw ValidationError("average_attackers mass sums to zero");
    std::vector<PureAttacker> support;
    std::vector<long double> w;
    for (auto& [attacker, weight] : merged) {
        if (weight <= 0.0L) continue;
        support.push_back(attacker);
        w.push_back(weight / total);
    }
    Eigen::VectorXd weights(static_cast<Eigen::Index>(w.size()));
    long double sum = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i];
    for (std::size_t i = 0; i < w.size(); ++i) weights(static_cast<Eigen::Index>(i)) = static_cast<double>(w[i] / sum);
    return MixedAttacker(std::move(support), std::move(weights));
}

// ---------------------------------------------------------------------------

std::size_t count_pure_attackers(const TabularMdp& mdp, const PerturbationSet& b) {
    if (b.num_states() != mdp.num_states()) throw ValidationError("perturbation set does not match MDP");
    constexpr std::size_t kSaturate = std::numeric_limits<std::size_t>::max();
    std::size_t count = 1;
    for (int h = 0; h < mdp.horizon(); ++h) {
        for (int s = 0; s < mdp.num_states(); ++s) {
            const std::size_t radix = b.allowed(s).size();
            if (count > kSaturate / radix) return kSaturate;
            count *= radix;
        }
    }
    return count;
}

std::vector<PureAttacker> enumerate_pure_attackers(const TabularMdp& mdp, const PerturbationSet& b,
                                                   std::size_t cap) {
    const std::size_t count = count_pure_attackers(mdp, b);
    if (count > cap) throw CapExceeded("pure attacker enumeration", count, cap);

    const int H = mdp.horizon();
    const int S = mdp.num_states();
    const std::size_t positions = static_cast<std::size_t>(H * S);
    std::vector<std::size_t> digit(positions, 0);
    std::vector<PureAttacker> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        std::vector<int> targets(positions);
        for (std::size_t p = 0; p < positions; ++p) {
            const int s = static_cast<int>(p % static_cast<std::size_t>(S));
            targets[p] = b.allowed(s)[digit[p]];
        }
        out.emplace_back(H, S, std::move(targets));
        // Odometer: the last position varies fastest.
        for (std::size_t p = positions; p-- > 0;) {
            const int s = static_cast<int>(p % static_cast<std::size_t>(S));
            if (++digit[p] < b.allowed(s).size()) break;
            digit[p] = 0;
        }
    }
    return out;
}

std::size_t canonical_attacker_id(const PureAttacker& attacker, const PerturbationSet& b) {
    if (!attacker.respects(b)) throw ValidationError("attacker does not respect the perturbation set");
    std::size_t id = 0;
    for (int h = 0; h < attacker.horizon(); ++h) {
        for (int s = 0; s < attacker.num_states(); ++s) {
            auto set = b.allowed(s);
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(set.begin(), set.end(), attacker.target(h, s)) - set.begin());
            id = id * set.size() + pos;
        }
    }
    return id;
}

// ---------------------------------------------------------------------------

ObservationHistory::ObservationHistory(std::vector<int> entries) : entries_(std::move(entries)) {
    if (!entries_.empty() && entries_.size() % 2 == 0) {
        throw ValidationError("observation history must end in an observation");
    }
}

ObservationHistory ObservationHistory::extended(int action, int observation) const {
    std::vector<int> e = entries_;
    e.push_back(action);
    e.push_back(observation);
    return ObservationHistory(std::move(e));
}

bool ObservationHistory::valid_for(int num_states, int num_actions, int horizon) const {
    if (entries_.empty() || step() > horizon) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const int bound = (i % 2 == 0) ? num_states : num_actions;
        if (entries_[i] < 0 || entries_[i] >= bound) return false;
    }
    return true;
}

std::string ObservationHistory::to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i) out += ", ";
        out += (i % 2 == 0 ? "o" : "a") + std::to_string(entries_[i]);
    }
    return out + ")";
}

// ---------------------------------------------------------------------------

VictimPolicy::VictimPolicy(PolicyKind kind, int num_states, int num_actions, int horizon)
    : kind_(kind),
      num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      roots_(static_cast<std::size_t>(num_states), kNone) {
    if (num_states < 1 || num_actions < 1 || horizon < 1) {
        throw ValidationError("victim policy dimensions must be positive");
    }
}

std::size_t VictimPolicy::decision_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.defined; }));
}

int VictimPolicy::ensure_path(const ObservationHistory& history) {
    if (!history.valid_for(num_states_, num_actions_, horizon_)) {
        throw ValidationError("history " + history.to_string() + " is malformed for this policy");
    }
    const std::size_t children = static_cast<std::size_t>(num_actions_ * num_states_);
    auto make_node = [&] {
        nodes_.push_back(Node{false, kNone, {}, std::vector<int>(children, kNone)});
        return static_cast<int>(nodes_.size() - 1);
    };
    const int o0 = history.observation(0);
    int node = roots_[static_cast<std::size_t>(o0)];
    if (node == kNone) {
        node = make_node();
        roots_[static_cast<std::size_t>(o0)] = node;
    }
    for (int h = 1; h < history.step(); ++h) {
        const auto slot = static_cast<std::size_t>(history.action(h - 1) * num_states_ + history.observation(h));
        int next = nodes_[static_cast<std::size_t>(node)].children[slot];
        if (next == kNone) {
            next = make_node();
            nodes_[static_cast<std::size_t>(node)].children[slot] = next;
        }
        node = next;
    }
    return node;
}

void VictimPolicy::set_action(const ObservationHistory& history, int action) {
    if (kind_ != PolicyKind::deterministic) throw ValidationError("set_action on a stochastic policy");
    if (action < 0 || action >= num_actions_) throw ValidationError("action out of range");
    const int node = ensure_path(history);
    auto& n = nodes_[static_cast<std::size_t>(node)];
    n.defined = true;
    n.action = action;
}

void VictimPolicy::set_distribution(const ObservationHistory& history, const Eigen::VectorXd& probs) {
    if (kind_ != PolicyKind::stochastic) throw ValidationError("set_distribution on a deterministic policy");
    if (probs.size() != num_actions_) throw ValidationError("action distribution has wrong length");
    check_simplex(probs, "action distribution at " + history.to_string());
    const int node = ensure_path(history);
    auto& n = nodes_[static_cast<std::size_t>(node)];
    n.defined = true;
    n.probs.assign(probs.data(), probs.data() + probs.size());
}

int VictimPolicy::action_at(int node) const {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    if (!n.defined) throw MissingHistory("policy node has no decision");
    if (kind_ != PolicyKind::deterministic) throw ValidationError("action_at on a stochastic policy");
    return n.action;
}

double VictimPolicy::probability_at(int node, int action) const {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    if (!n.defined) throw MissingHistory("policy node has no decision");
    if (kind_ == PolicyKind::deterministic) return n.action == action ? 1.0 : 0.0;
    return n.probs[static_cast<std::size_t>(action)];
}

std::optional<int> VictimPolicy::find(const ObservationHistory& history) const {
    if (!history.valid_for(num_states_, num_actions_, horizon_)) return std::nullopt;
    int node = root(history.observation(0));
    for (int h = 1; h < history.step() && node != kNone; ++h) {
        node = child(node, history.action(h - 1), history.observation(h));
    }
    if (node == kNone || !has_decision(node)) return std::nullopt;
    return node;
}

Eigen::VectorXd VictimPolicy::decision(const ObservationHistory& history) const {
    auto node = find(history);
    if (!node) throw MissingHistory("policy has no decision at history " + history.to_string());
    Eigen::VectorXd p(num_actions_);
    for (int a = 0; a < num_actions_; ++a) p(a) = probability_at(*node, a);
    return p;
}

bool VictimPolicy::operator==(const VictimPolicy& other) const {
    if (kind_ != other.kind_ || num_states_ != other.num_states_ || num_actions_ != other.num_actions_ ||
        horizon_ != other.horizon_) {
        return false;
    }
    std::vector<std::pair<ObservationHistory, std::vector<double>>> mine, theirs;
    auto collect = [](const VictimPolicy& p, auto& out) {
        p.for_each_decision([&](const ObservationHistory& h, int node) {
            std::vector<double> d(static_cast<std::size_t>(p.num_actions()));
            for (int a = 0; a < p.num_actions(); ++a) d[static_cast<std::size_t>(a)] = p.probability_at(node, a);
            out.emplace_back(h, std::move(d));
        });
    };
    collect(*this, mine);
    collect(other, theirs);
    return mine == theirs;
}

// ---------------------------------------------------------------------------

int PolicyClass::add(VictimPolicy policy, Provenance provenance) {
    policies_.push_back(std::move(policy));
    provenance_.push_back(provenance);
    return static_cast<int>(policies_.size() - 1);
}

PolicyClass PolicyClass::subset(std::span<const int> ids) const {
    PolicyClass out;
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= size()) throw ValidationError("policy id out of range");
        out.add(policies_[static_cast<std::size_t>(id)], provenance_[static_cast<std::size_t>(id)]);
    }
    return out;
}

MetaPolicy::MetaPolicy(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    check_simplex(weights_, "meta-policy weights");
}

MetaPolicy MetaPolicy::uniform(std::size_t size) {
    if (size == 0) throw ValidationError("meta-policy over an empty class");
    return MetaPolicy(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size), 1.0 / static_cast<double>(size)));
}

}  // namespace advrl
