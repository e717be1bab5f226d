#include "advrl/serialization.hpp"

#include <cmath>

namespace advrl {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ValidationError(path + ": " + message);
}

const Json& field(const Json& doc, const std::string& path, const char* key) {
    if (!doc.is_object()) fail(path, "expected an object");
    auto it = doc.find(key);
    if (it == doc.end()) fail(path, std::string("missing key '") + key + "'");
    return *it;
}

std::string child_path(const std::string& path, const char* key) { return path + "." + key; }
std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

int read_int(const Json& v, const std::string& path, int lo, int hi) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi) fail(path, std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
}

double read_double(const Json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

const Json& read_array(const Json& v, const std::string& path, std::size_t size) {
    if (!v.is_array()) fail(path, "expected an array");
    if (v.size() != size) fail(path, "expected " + std::to_string(size) + " entries, found " + std::to_string(v.size()));
    return v;
}

Eigen::VectorXd read_vector(const Json& v, const std::string& path, std::size_t size) {
    read_array(v, path, size);
    Eigen::VectorXd out(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) out(static_cast<Eigen::Index>(i)) = read_double(v[i], index_path(path, i));
    return out;
}

void check_probability(const Eigen::VectorXd& p, const std::string& path) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) < 0.0) fail(index_path(path, static_cast<std::size_t>(i)), "negative probability");
    }
    const double sum = p.sum();
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        fail(path, "probabilities sum to " + std::to_string(sum) + " (deficit " + std::to_string(1.0 - sum) + ")");
    }
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

PureAttacker decode_attacker_id(std::size_t id, const TabularMdp& mdp, const PerturbationSet& b,
                                const std::string& path) {
    const int H = mdp.horizon();
    const int S = mdp.num_states();
    std::vector<int> targets(static_cast<std::size_t>(H * S));
    for (int pos = H * S - 1; pos >= 0; --pos) {
        const auto allowed = b.allowed(pos % S);
        targets[static_cast<std::size_t>(pos)] = allowed[id % allowed.size()];
        id /= allowed.size();
    }
    if (id != 0) fail(path, "attacker id exceeds the number of pure attackers");
    return PureAttacker(H, S, std::move(targets));
}

PureAttacker pure_from_json(const Json& spec, const TabularMdp& mdp, const PerturbationSet& b,
                            const std::string& path) {
    const int H = mdp.horizon();
    const int S = mdp.num_states();
    if (spec.is_string()) {
        if (spec.get<std::string>() != "identity") fail(path, "unknown attacker name '" + spec.get<std::string>() + "'");
        return PureAttacker::identity(H, S);
    }
    if (!spec.is_object()) fail(path, "expected an attacker spec");
    if (spec.contains("constant")) {
        return PureAttacker::constant(H, S, read_int(spec["constant"], child_path(path, "constant"), 0, S - 1));
    }
    if (spec.contains("id")) {
        const Json& v = spec["id"];
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            fail(child_path(path, "id"), "expected a non-negative integer");
        }
        return decode_attacker_id(v.get<std::size_t>(), mdp, b, child_path(path, "id"));
    }
    if (spec.contains("targets")) {
        const auto p = child_path(path, "targets");
        read_array(spec["targets"], p, static_cast<std::size_t>(H));
        std::vector<int> targets;
        for (int h = 0; h < H; ++h) {
            const auto ph = index_path(p, static_cast<std::size_t>(h));
            read_array(spec["targets"][static_cast<std::size_t>(h)], ph, static_cast<std::size_t>(S));
            for (int s = 0; s < S; ++s) {
                targets.push_back(read_int(spec["targets"][static_cast<std::size_t>(h)][static_cast<std::size_t>(s)],
                                           index_path(ph, static_cast<std::size_t>(s)), 0, S - 1));
            }
        }
        return PureAttacker(H, S, std::move(targets));
    }
    fail(path, "attacker spec needs one of 'constant', 'id', 'targets', 'support'");
}

}  // namespace

Json instance_to_json(const Instance& instance) {
    const auto& mdp = instance.mdp;
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    Json transition = Json::array();
    for (int s = 0; s < S; ++s) {
        Json per_action = Json::array();
        for (int a = 0; a < A; ++a) {
            Json row = Json::array();
            for (int n = 0; n < S; ++n) row.push_back(mdp.transition(s, a, n));
            per_action.push_back(std::move(row));
        }
        transition.push_back(std::move(per_action));
    }
    Json reward = Json::array();
    for (int h = 0; h < mdp.horizon(); ++h) {
        Json per_state = Json::array();
        for (int s = 0; s < S; ++s) {
            Json row = Json::array();
            for (int a = 0; a < A; ++a) row.push_back(mdp.reward(h, s, a));
            per_state.push_back(std::move(row));
        }
        reward.push_back(std::move(per_state));
    }
    Json allowed = Json::array();
    for (int s = 0; s < S; ++s) {
        const auto set = instance.perturbation.allowed(s);
        allowed.push_back(std::vector<int>(set.begin(), set.end()));
    }
    Json doc;
    doc["num_states"] = S;
    doc["num_actions"] = A;
    doc["horizon"] = mdp.horizon();
    doc["transition"] = std::move(transition);
    doc["initial_dist"] = to_std(mdp.initial_dist());
    doc["reward"] = std::move(reward);
    doc["perturbation"] = {{"allowed", std::move(allowed)},
                           {"include_identity", instance.perturbation.include_identity()}};
    return doc;
}

Instance instance_from_json(const Json& doc) {
    const std::string root = "$";
    constexpr int kMax = 1 << 20;
    const int S = read_int(field(doc, root, "num_states"), "$.num_states", 1, kMax);
    const int A = read_int(field(doc, root, "num_actions"), "$.num_actions", 1, kMax);
    const int H = read_int(field(doc, root, "horizon"), "$.horizon", 1, kMax);

    const Json& tj = read_array(field(doc, root, "transition"), "$.transition", static_cast<std::size_t>(S));
    Eigen::MatrixXd t(S * A, S);
    for (int s = 0; s < S; ++s) {
        const auto ps = index_path("$.transition", static_cast<std::size_t>(s));
        const Json& per_action = read_array(tj[static_cast<std::size_t>(s)], ps, static_cast<std::size_t>(A));
        for (int a = 0; a < A; ++a) {
            const auto pa = index_path(ps, static_cast<std::size_t>(a));
            const Json& row = per_action[static_cast<std::size_t>(a)];
            if (row.is_array() && !row.empty() && row[0].is_array()) {
                fail(pa, "time-dependent transitions are not supported; give one S x A x S kernel");
            }
            const Eigen::VectorXd p = read_vector(row, pa, static_cast<std::size_t>(S));
            check_probability(p, pa);
            t.row(s * A + a) = p.transpose();
        }
    }

    const Eigen::VectorXd mu = read_vector(field(doc, root, "initial_dist"), "$.initial_dist", static_cast<std::size_t>(S));
    check_probability(mu, "$.initial_dist");

    const Json& rj = read_array(field(doc, root, "reward"), "$.reward", static_cast<std::size_t>(H));
    std::vector<Eigen::MatrixXd> r;
    for (int h = 0; h < H; ++h) {
        const auto ph = index_path("$.reward", static_cast<std::size_t>(h));
        const Json& per_state = read_array(rj[static_cast<std::size_t>(h)], ph, static_cast<std::size_t>(S));
        Eigen::MatrixXd m(S, A);
        for (int s = 0; s < S; ++s) {
            const auto ps = index_path(ph, static_cast<std::size_t>(s));
            const Eigen::VectorXd row = read_vector(per_state[static_cast<std::size_t>(s)], ps, static_cast<std::size_t>(A));
            for (int a = 0; a < A; ++a) {
                if (row(a) < 0.0 || row(a) > 1.0) fail(index_path(ps, static_cast<std::size_t>(a)), "reward out of [0,1]");
            }
            m.row(s) = row.transpose();
        }
        r.push_back(std::move(m));
    }

    const Json& pj = field(doc, root, "perturbation");
    const Json& aj = read_array(field(pj, "$.perturbation", "allowed"), "$.perturbation.allowed", static_cast<std::size_t>(S));
    const Json& ij = field(pj, "$.perturbation", "include_identity");
    if (!ij.is_boolean()) fail("$.perturbation.include_identity", "expected a boolean");
    std::vector<std::vector<int>> allowed;
    for (int s = 0; s < S; ++s) {
        const auto ps = index_path("$.perturbation.allowed", static_cast<std::size_t>(s));
        const Json& set = aj[static_cast<std::size_t>(s)];
        if (!set.is_array()) fail(ps, "expected an array");
        std::vector<int> entries;
        for (std::size_t i = 0; i < set.size(); ++i) entries.push_back(read_int(set[i], index_path(ps, i), 0, S - 1));
        allowed.push_back(std::move(entries));
    }
    std::optional<PerturbationSet> b;
    try {
        b.emplace(S, std::move(allowed), ij.get<bool>());
    } catch (const ValidationError& e) {
        fail("$.perturbation", e.what());
    }
    TabularMdp mdp(S, A, H, std::move(t), mu, std::move(r));
    return {std::move(mdp), std::move(*b)};
}

Json policy_to_json(const VictimPolicy& policy) {
    Json nodes = Json::array();
    policy.for_each_decision([&](const ObservationHistory& history, int node) {
        Json entry;
        entry["history"] = history.entries();
        if (policy.kind() == PolicyKind::deterministic) {
            entry["action"] = policy.action_at(node);
        } else {
            Json probs = Json::array();
            for (int a = 0; a < policy.num_actions(); ++a) probs.push_back(policy.probability_at(node, a));
            entry["probs"] = std::move(probs);
        }
        nodes.push_back(std::move(entry));
    });
    Json doc;
    doc["kind"] = policy.kind() == PolicyKind::deterministic ? "deterministic" : "stochastic";
    doc["num_states"] = policy.num_states();
    doc["num_actions"] = policy.num_actions();
    doc["horizon"] = policy.horizon();
    doc["nodes"] = std::move(nodes);
    return doc;
}

VictimPolicy policy_from_json(const Json& doc, const std::string& path) {
    const Json& kj = field(doc, path, "kind");
    if (!kj.is_string()) fail(child_path(path, "kind"), "expected a string");
    const auto kind_name = kj.get<std::string>();
    PolicyKind kind;
    if (kind_name == "deterministic") {
        kind = PolicyKind::deterministic;
    } else if (kind_name == "stochastic") {
        kind = PolicyKind::stochastic;
    } else {
        fail(child_path(path, "kind"), "unknown policy kind '" + kind_name + "'");
    }
    constexpr int kMax = 1 << 20;
    const int S = read_int(field(doc, path, "num_states"), child_path(path, "num_states"), 1, kMax);
    const int A = read_int(field(doc, path, "num_actions"), child_path(path, "num_actions"), 1, kMax);
    const int H = read_int(field(doc, path, "horizon"), child_path(path, "horizon"), 1, kMax);
    VictimPolicy policy(kind, S, A, H);

    const auto pn = child_path(path, "nodes");
    const Json& nodes = field(doc, path, "nodes");
    if (!nodes.is_array()) fail(pn, "expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto pi = index_path(pn, i);
        const Json& hj = field(nodes[i], pi, "history");
        if (!hj.is_array()) fail(child_path(pi, "history"), "expected an array");
        std::vector<int> entries;
        for (std::size_t e = 0; e < hj.size(); ++e) {
            entries.push_back(read_int(hj[e], index_path(child_path(pi, "history"), e), 0, kMax));
        }
        ObservationHistory history(std::move(entries));
        if (!history.valid_for(S, A, H)) fail(child_path(pi, "history"), "malformed history " + history.to_string());
        try {
            if (kind == PolicyKind::deterministic) {
                policy.set_action(history, read_int(field(nodes[i], pi, "action"), child_path(pi, "action"), 0, A - 1));
            } else {
                policy.set_distribution(
                    history, read_vector(field(nodes[i], pi, "probs"), child_path(pi, "probs"), static_cast<std::size_t>(A)));
            }
        } catch (const ValidationError& e) {
            fail(pi, e.what());
        }
    }
    return policy;
}

Json class_to_json(const PolicyClass& policies) {
    Json list = Json::array();
    for (std::size_t i = 0; i < policies.size(); ++i) {
        Json entry;
        entry["id"] = i;
        entry["provenance"] = {{"iteration", policies.provenance(i).iteration},
                               {"attacker_id", policies.provenance(i).attacker_id}};
        entry["policy"] = policy_to_json(policies[i]);
        list.push_back(std::move(entry));
    }
    return list;
}

PolicyClass class_from_json(const Json& doc, const std::string& path) {
    // Accept either the bare array or an output document wrapping it.
    if (doc.is_object() && doc.contains("policies")) return class_from_json(doc["policies"], child_path(path, "policies"));
    if (!doc.is_array()) fail(path, "expected an array of policies");
    PolicyClass out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto pi = index_path(path, i);
        const Json& entry = doc[i];
        if (entry.contains("id") && read_int(entry["id"], child_path(pi, "id"), 0, 1 << 30) != static_cast<int>(i)) {
            fail(child_path(pi, "id"), "policy ids must be dense and in order");
        }
        Provenance prov;
        if (entry.contains("provenance")) {
            const auto pp = child_path(pi, "provenance");
            prov.iteration = read_int(field(entry["provenance"], pp, "iteration"), child_path(pp, "iteration"), -1, 1 << 30);
            prov.attacker_id = read_int(field(entry["provenance"], pp, "attacker_id"), child_path(pp, "attacker_id"), -1, 1 << 30);
        }
        out.add(policy_from_json(field(entry, pi, "policy"), child_path(pi, "policy")), prov);
    }
    return out;
}

Json solution_to_json(const GameSolution& solution) {
    Json doc;
    doc["value"] = solution.value;
    doc["row_mix"] = to_std(solution.row_mix);
    doc["col_mix"] = to_std(solution.col_mix);
    doc["duality_gap"] = solution.duality_gap;
    return doc;
}

MixedAttacker attacker_from_json(const Json& spec, const TabularMdp& mdp, const PerturbationSet& b,
                                 const std::string& path) {
    std::optional<MixedAttacker> out;
    try {
        if (spec.is_object() && spec.contains("support")) {
            const auto ps = child_path(path, "support");
            const Json& sj = spec["support"];
            if (!sj.is_array() || sj.empty()) fail(ps, "expected a non-empty array");
            std::vector<PureAttacker> support;
            for (std::size_t i = 0; i < sj.size(); ++i) support.push_back(pure_from_json(sj[i], mdp, b, index_path(ps, i)));
            const Eigen::VectorXd w = read_vector(field(spec, path, "weights"), child_path(path, "weights"), sj.size());
            out.emplace(std::move(support), w);
        } else {
            out.emplace(MixedAttacker::pure(pure_from_json(spec, mdp, b, path)));
        }
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind("$", 0) == 0) throw;
        fail(path, msg);
    }
    for (const auto& m : out->support()) {
        if (!m.respects(b)) throw InvalidSchedule(path + ": attacker violates the perturbation set");
    }
    return std::move(*out);
}

Json attacker_to_json(const MixedAttacker& attacker, const PerturbationSet& b) {
    Json ids = Json::array();
    for (const auto& m : attacker.support()) ids.push_back(canonical_attacker_id(m, b));
    return {{"support_ids", std::move(ids)}, {"weights", to_std(attacker.weights())}};
}

AttackSchedule schedule_from_json(const Json& spec, const TabularMdp& mdp, const PerturbationSet& b,
                                  const std::string& path) {
    const Json& tj = field(spec, path, "type");
    if (!tj.is_string()) fail(child_path(path, "type"), "expected a string");
    const auto type = tj.get<std::string>();
    auto attacker = [&](const char* key) {
        return attacker_from_json(field(spec, path, key), mdp, b, child_path(path, key));
    };
    std::optional<AttackSchedule> out;
    if (type == "static") {
        out = StaticSchedule{attacker("attacker")};
    } else if (type == "periodic") {
        const int period = read_int(field(spec, path, "period"), child_path(path, "period"), 1, 1 << 30);
        const int duty = spec.contains("duty") ? read_int(spec["duty"], child_path(path, "duty"), 1, period)
                                               : std::max(1, period / 2);
        out = PeriodicSchedule{period, duty, attacker("on"), attacker("off")};
    } else if (type == "probabilistic") {
        const double p = read_double(field(spec, path, "p"), child_path(path, "p"));
        if (p < 0.0 || p > 1.0) fail(child_path(path, "p"), "switch probability must lie in [0, 1]");
        const int interval = spec.contains("interval") ? read_int(spec["interval"], child_path(path, "interval"), 1, 1 << 30) : 50;
        out = ProbabilisticSchedule{p, interval, attacker("on"), attacker("off")};
    } else if (type == "adaptive_lp") {
        bool recompute = false;
        if (spec.contains("recompute")) {
            if (!spec["recompute"].is_boolean()) fail(child_path(path, "recompute"), "expected a boolean");
            recompute = spec["recompute"].get<bool>();
        }
        out = AdaptiveLpSchedule{recompute};
    } else {
        fail(child_path(path, "type"), "unknown schedule type '" + type + "'");
    }
    validate_schedule(*out, b);
    return std::move(*out);
}

}  // namespace advrl
