#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "advrl/discovery.hpp"
#include "advrl/mdp.hpp"

namespace advrl {

struct Instance {
    TabularMdp mdp;
    PerturbationSet perturbation;
};

// State and action names of the three-state construction.
namespace prop1 {
inline constexpr int s_good = 0;
inline constexpr int s_bad = 1;
inline constexpr int s_dummy = 2;
inline constexpr int a_good = 0;
inline constexpr int a_bad = 1;
}  // namespace prop1

/**
 * Three states, two actions. a_good keeps s_good, a_bad moves to the
 * absorbing s_bad, s_dummy self-loops and is never occupied. Reward 1 only
 * in s_good at the last step. Every state may be shown as itself or as
 * s_dummy; s_dummy may also be shown as s_good so that |B(s)| = 2 holds
 * everywhere.
 */
Instance gen_prop1(int horizon);

/// Two states, two actions, uniform transitions and start, reward 1 on (s1, a1) and (s2, a2), B = S.
Instance gen_thm2(int horizon);

struct RandomSpec {
    int num_states = 3;
    int num_actions = 2;
    int horizon = 2;
    int degree = 2;          // |B(s)|, including s itself
    double sparsity = 0.0;   // probability that a reward entry is zeroed
    std::uint64_t seed = 0;

    void validate() const;
};

/// Flat-Dirichlet transitions and start distribution, uniform rewards, seeded B(s).
Instance gen_random(const RandomSpec& spec);

struct DemoScenario {
    Instance instance;
    DiscoveryConfig discovery;
};

/// One-step instance with exactly two pure attackers for plotting discovery in the plane.
DemoScenario gen_appendix_c_demo();

/// Per-iteration points (J(pi_k, nu_1), J(pi_k, nu_2)) of a run on the demo scenario.
Eigen::MatrixX2d demo_points(const DiscoveryResult& result);

}  // namespace advrl
