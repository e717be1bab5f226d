#pragma once

#include <string>

#include <json.hpp>

#include "advrl/game.hpp"
#include "advrl/instances.hpp"
#include "advrl/mdp.hpp"
#include "advrl/online.hpp"

namespace advrl {

using Json = nlohmann::ordered_json;

// Instance document: num_states, num_actions, horizon, transition (S x A x S),
// initial_dist, reward (H x S x A), perturbation {allowed, include_identity}.
Json instance_to_json(const Instance& instance);

/// Strict loader: the first violated invariant raises ValidationError naming its JSON path.
Instance instance_from_json(const Json& doc);

// Policies are lists of decision nodes keyed by their observation history.
Json policy_to_json(const VictimPolicy& policy);
VictimPolicy policy_from_json(const Json& doc, const std::string& path = "$");

Json class_to_json(const PolicyClass& policies);
PolicyClass class_from_json(const Json& doc, const std::string& path = "$");

Json solution_to_json(const GameSolution& solution);

/**
 * Attacker specs accepted in configs:
 *   "identity" | {"constant": s} | {"id": canonical id} | {"targets": H x S}
 *   | {"support": [spec, ...], "weights": [...]}.
 * The result is checked against `b`.
 */
MixedAttacker attacker_from_json(const Json& spec, const TabularMdp& mdp, const PerturbationSet& b,
                                 const std::string& path = "$");

/// Mixed attacker as canonical ids and weights.
Json attacker_to_json(const MixedAttacker& attacker, const PerturbationSet& b);

/**
 * {"type": "static", "attacker": spec}
 * {"type": "periodic", "period": P, "duty": D (default P/2), "on": spec, "off": spec}
 * {"type": "probabilistic", "p": p, "interval": L (default 50), "on": spec, "off": spec}
 * {"type": "adaptive_lp", "recompute": bool}
 */
AttackSchedule schedule_from_json(const Json& spec, const TabularMdp& mdp, const PerturbationSet& b,
                                  const std::string& path = "$");

}  // namespace advrl
