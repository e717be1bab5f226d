#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "advrl/eval.hpp"
#include "advrl/mdp.hpp"

namespace advrl {

struct DiscoveryConfig {
    double delta = 0.0;
    int max_iterations = 10000;
    std::size_t attacker_cap = kDefaultAttackerCap;
    std::size_t node_cap = kDefaultNodeCap;
    unsigned threads = 1;

    void validate() const;
};

enum class StopReason { threshold, cap };

const char* to_string(StopReason reason);

struct DiscoveryStep {
    int k;                     // 1-based iteration, equals the new policy's id + 1
    double f;                  // dual score that selected the policy
    int selected_attacker_id;  // column achieving f
    double br_value;           // best-response value against that column
    double dominance_margin;   // margin of the new policy against the class before it
};

struct DiscoveryTrace {
    std::vector<DiscoveryStep> steps;
    double final_score;  // score at exit; <= delta iff stopped by threshold
    double gap_pure;
    StopReason stopped_reason;
};

struct DiscoveryResult {
    PolicyClass policies;
    DiscoveryTrace trace;
    std::vector<PureAttacker> attackers;  // canonical V^det
    std::vector<double> br_values;        // per attacker column
    PayoffTable table;                    // rows aligned with `policies`
};

/**
 * Grows a policy class from scratch. Each iteration scores every pure
 * attacker by br_values[j] - max over the class of J(pi, nu_j) (0 for the
 * empty class), stops once the best score is <= delta, and otherwise adds
 * the best response to the top-scoring attacker (lowest id on ties).
 */
DiscoveryResult discover(const TabularMdp& mdp, const PerturbationSet& b, const DiscoveryConfig& cfg);

struct PruneResult {
    PolicyClass policies;
    std::vector<int> kept_ids;  // ids in the input class, ascending
    PayoffTable table;
};

/**
 * Iterated elimination: removes a policy whose dominance margin against the
 * rest is <= delta, scanning from the highest id down and restarting after
 * every removal. A single remaining policy is always kept.
 */
PruneResult prune_dominated(const PolicyClass& policies, const PayoffTable& table, double delta);

/// CSV `k,f_k,selected_attacker_id,br_value,dominance_margin`.
void write_trace_csv(std::ostream& out, const DiscoveryTrace& trace);

}  // namespace advrl
