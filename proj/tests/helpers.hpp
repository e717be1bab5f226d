#pragma once

#include <vector>

#include "advrl/eval.hpp"
#include "advrl/instances.hpp"

namespace testing {

inline constexpr double kTol = 1e-9;

// One-step thm2 attackers by canonical id.
inline constexpr int kConst1 = 0;
inline constexpr int kGood = 1;
inline constexpr int kBad = 2;
inline constexpr int kConst2 = 3;

// H = 1 observation-Markov policy from the action taken on each observation.
inline advrl::VictimPolicy one_step(const advrl::Instance& in, int on_s1, int on_s2) {
    Eigen::MatrixXi actions(1, 2);
    actions << on_s1, on_s2;
    return advrl::observation_markov_policy(in.mdp, in.perturbation, actions);
}

// pi1 = (a1, a2), pi2 = (a1, a1), pi3 = (a2, a1), pi4 = (a2, a2).
inline std::vector<advrl::VictimPolicy> thm2_policies(const advrl::Instance& in) {
    return {one_step(in, 0, 1), one_step(in, 0, 0), one_step(in, 1, 0), one_step(in, 1, 1)};
}

inline advrl::PolicyClass make_class(const std::vector<advrl::VictimPolicy>& ps) {
    advrl::PolicyClass c;
    for (const auto& p : ps) c.add(p);
    return c;
}

inline advrl::RandomSpec random_spec(int s, int a, int h, int d, std::uint64_t seed, double sparsity = 0.0) {
    advrl::RandomSpec r;
    r.num_states = s;
    r.num_actions = a;
    r.horizon = h;
    r.degree = d;
    r.sparsity = sparsity;
    r.seed = seed;
    return r;
}

}  // namespace testing
