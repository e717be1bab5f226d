#include "advrl/instances.hpp"

#include <numeric>
#include <string>
#include <vector>

#include "advrl/rng.hpp"

namespace advrl {

namespace {

std::vector<Eigen::MatrixXd> zero_rewards(int horizon, int num_states, int num_actions) {
    return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(horizon),
                                        Eigen::MatrixXd::Zero(num_states, num_actions));
}

void check_horizon(int horizon, int minimum) {
    if (horizon < minimum) throw ValidationError("horizon must be >= " + std::to_string(minimum));
}

Eigen::VectorXd flat_dirichlet(CounterRng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.exponential();
    return v / v.sum();
}

}  // namespace

Instance gen_prop1(int horizon) {
    using namespace prop1;
    check_horizon(horizon, 2);
    constexpr int S = 3;
    constexpr int A = 2;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(S * A, S);
    t(s_good * A + a_good, s_good) = 1.0;
    t(s_good * A + a_bad, s_bad) = 1.0;
    t(s_bad * A + a_good, s_bad) = 1.0;
    t(s_bad * A + a_bad, s_bad) = 1.0;
    t(s_dummy * A + a_good, s_dummy) = 1.0;
    t(s_dummy * A + a_bad, s_dummy) = 1.0;

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(S);
    mu(s_good) = 1.0;

    auto r = zero_rewards(horizon, S, A);
    r.back().row(s_good).setOnes();

    std::vector<std::vector<int>> allowed{{s_good, s_dummy}, {s_bad, s_dummy}, {s_good, s_dummy}};
    return {TabularMdp(S, A, horizon, std::move(t), std::move(mu), std::move(r)),
            PerturbationSet(S, std::move(allowed), true)};
}

Instance gen_thm2(int horizon) {
    check_horizon(horizon, 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(4, 2, 0.5);
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(2, 0.5);
    auto r = zero_rewards(horizon, 2, 2);
    for (auto& m : r) {
        m(0, 0) = 1.0;
        m(1, 1) = 1.0;
    }
    return {TabularMdp(2, 2, horizon, std::move(t), std::move(mu), std::move(r)), PerturbationSet::full(2)};
}

void RandomSpec::validate() const {
    if (num_states < 2 || num_states > 6) throw ValidationError("random.num_states must lie in [2, 6]");
    if (num_actions < 2 || num_actions > 4) throw ValidationError("random.num_actions must lie in [2, 4]");
    if (horizon < 1 || horizon > 5) throw ValidationError("random.horizon must lie in [1, 5]");
    if (degree < 1 || degree > num_states) throw ValidationError("random.degree must lie in [1, num_states]");
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw ValidationError("random.sparsity must lie in [0, 1]");
}

Instance gen_random(const RandomSpec& spec) {
    spec.validate();
    const int S = spec.num_states;
    const int A = spec.num_actions;
    CounterRng rng(spec.seed, Stream::generator);

    Eigen::MatrixXd t(S * A, S);
    for (int row = 0; row < S * A; ++row) t.row(row) = flat_dirichlet(rng, S).transpose();
    Eigen::VectorXd mu = flat_dirichlet(rng, S);

    auto r = zero_rewards(spec.horizon, S, A);
    for (auto& m : r) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double value = rng.uniform();
                m(s, a) = rng.uniform() < spec.sparsity ? 0.0 : value;
            }
        }
    }

    std::vector<std::vector<int>> allowed(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        std::vector<int> others;
        for (int o = 0; o < S; ++o) {
            if (o != s) others.push_back(o);
        }
        // Partial Fisher-Yates: the first degree-1 slots are the chosen states.
        for (int i = 0; i < spec.degree - 1; ++i) {
            const auto span = static_cast<std::uint64_t>(others.size()) - static_cast<std::uint64_t>(i);
            const int j = i + static_cast<int>(rng.next() % span);
            std::swap(others[static_cast<std::size_t>(i)], others[static_cast<std::size_t>(j)]);
        }
        auto& set = allowed[static_cast<std::size_t>(s)];
        set.push_back(s);
        set.insert(set.end(), others.begin(), others.begin() + (spec.degree - 1));
    }
    return {TabularMdp(S, A, spec.horizon, std::move(t), std::move(mu), std::move(r)),
            PerturbationSet(S, std::move(allowed), true)};
}

DemoScenario gen_appendix_c_demo() {
    // State 0 can be disguised as state 1; the victim then cannot tell the
    // states apart and action 2 becomes the safe compromise.
    constexpr int S = 2;
    constexpr int A = 3;
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(S * A, S, 0.5);
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(S, 0.5);
    Eigen::MatrixXd r(S, A);
    r << 1.0, 0.0, 0.6,
         0.0, 1.0, 0.6;
    DemoScenario demo{{TabularMdp(S, A, 1, std::move(t), std::move(mu), {r}),
                       PerturbationSet(S, {{0, 1}, {1}}, true)},
                      DiscoveryConfig{}};
    return demo;
}

Eigen::MatrixX2d demo_points(const DiscoveryResult& result) {
    if (result.table.cols() != 2) throw ValidationError("demo points need exactly two attacker columns");
    return result.table;
}

}  // namespace advrl
