#include "advrl/discovery.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "advrl/csv.hpp"
#include "advrl/game.hpp"

namespace advrl {

namespace {

constexpr double kScoreTieTolerance = 1e-12;

PayoffTable select_rows(const PayoffTable& table, const std::vector<int>& rows) {
    PayoffTable out(static_cast<Eigen::Index>(rows.size()), table.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = table.row(rows[i]);
    return out;
}

}  // namespace

void DiscoveryConfig::validate() const {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("discovery.delta must be >= 0");
    if (max_iterations < 1) throw ValidationError("discovery.max_iterations must be positive");
    if (attacker_cap < 1 || node_cap < 1) throw ValidationError("discovery caps must be positive");
}

const char* to_string(StopReason reason) { return reason == StopReason::threshold ? "threshold" : "cap"; }

DiscoveryResult discover(const TabularMdp& mdp, const PerturbationSet& b, const DiscoveryConfig& cfg) {
    cfg.validate();
    DiscoveryResult out;
    out.attackers = enumerate_pure_attackers(mdp, b, cfg.attacker_cap);
    out.br_values = best_response_values(mdp, out.attackers, cfg.node_cap, cfg.threads);

    const auto n = static_cast<Eigen::Index>(out.attackers.size());
    out.table = PayoffTable(0, n);
    Eigen::RowVectorXd column_best = Eigen::RowVectorXd::Zero(n);

    for (int k = 1;; ++k) {
        Eigen::Index selected = 0;
        double score = out.br_values[0] - column_best(0);
        for (Eigen::Index j = 1; j < n; ++j) {
            const double s = out.br_values[static_cast<std::size_t>(j)] - column_best(j);
            if (s > score + kScoreTieTolerance) {
                score = s;
                selected = j;
            }
        }
        out.trace.final_score = score;
        if (score <= cfg.delta) {
            out.trace.stopped_reason = StopReason::threshold;
            break;
        }
        if (static_cast<int>(out.policies.size()) >= cfg.max_iterations) {
            out.trace.stopped_reason = StopReason::cap;
            break;
        }

        auto br = best_response(mdp, b, MixedAttacker::pure(out.attackers[static_cast<std::size_t>(selected)]),
                                cfg.node_cap);
        const Eigen::RowVectorXd row = payoff_row(mdp, br.policy, out.attackers, cfg.node_cap, cfg.threads);

        double margin;
        try {
            // Against the empty class every mixture is worth 0.
            margin = out.table.rows() == 0 ? row.maxCoeff() : dominance_margin(row, out.table).margin;
        } catch (const SolverFailure& e) {
            throw SolverFailure("discovery iteration " + std::to_string(k) + ": " + e.what());
        }
        out.trace.steps.push_back({k, score, static_cast<int>(selected),
                                   out.br_values[static_cast<std::size_t>(selected)], margin});

        out.policies.add(std::move(br.policy), Provenance{k, static_cast<int>(selected)});
        out.table.conservativeResize(out.table.rows() + 1, Eigen::NoChange);
        out.table.row(out.table.rows() - 1) = row;
        column_best = column_best.cwiseMax(row);
    }
    out.trace.gap_pure = certify_gap_pure(out.table, out.br_values).gap;
    return out;
}

PruneResult prune_dominated(const PolicyClass& policies, const PayoffTable& table, double delta) {
    if (static_cast<std::size_t>(table.rows()) != policies.size()) {
        throw ValidationError("payoff table rows do not match the policy class");
    }
    std::vector<int> kept(policies.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = static_cast<int>(i);

    bool removed = true;
    while (removed && kept.size() > 1) {
        removed = false;
        for (std::size_t pos = kept.size(); pos-- > 0;) {
            std::vector<int> others = kept;
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(pos));
            const double margin = dominance_margin(table.row(kept[pos]), select_rows(table, others)).margin;
            if (margin <= delta) {
                kept = std::move(others);
                removed = true;
                break;
            }
        }
    }
    return {policies.subset(kept), kept, select_rows(table, kept)};
}

void write_trace_csv(std::ostream& out, const DiscoveryTrace& trace) {
    out << "k,f_k,selected_attacker_id,br_value,dominance_margin\n";
    for (const auto& s : trace.steps) {
        out << s.k << ',' << format_double(s.f) << ',' << s.selected_attacker_id << ',' << format_double(s.br_value)
            << ',' << format_double(s.dominance_margin) << '\n';
    }
}

}  // namespace advrl
