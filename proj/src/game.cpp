#include "advrl/game.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace advrl {

namespace detail {

namespace {

using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

LongVector clean_mix(LongVector v) {
    v = v.cwiseMax(0.0L);
    const long double total = v.sum();
    if (!(total > 0.0L)) throw SolverFailure("simplex returned an all-zero strategy");
    return v / total;
}

}  // namespace

GameSolution solve_row_max(const LongMatrix& payoff) {
    // Shift into a strictly positive matrix so the value is positive and the
    // packing LP is bounded.
    const long double shift = 1.0L - payoff.minCoeff();
    const LongMatrix positive = payoff.array() + shift;

    const auto lp = solve_packing_lp<double>(positive.cast<double>());
    if (!(lp.objective > 0.0)) throw SolverFailure("packing LP returned a non-positive objective");

    const LongVector col = clean_mix(lp.primal.cast<long double>());
    const LongVector row = clean_mix(lp.dual.cast<long double>());

    const long double lower = (row.transpose() * payoff).minCoeff();
    const long double upper = (payoff * col).maxCoeff();
    const long double value = 1.0L / static_cast<long double>(lp.objective) - shift;

    GameSolution out;
    out.row_mix = row.cast<double>();
    out.col_mix = col.cast<double>();
    out.value = static_cast<double>(value);
    out.duality_gap = static_cast<double>(std::max(0.0L, upper - lower));
    if (out.duality_gap > kDualityGapTarget) {
        throw SolverFailure("matrix game duality gap " + std::to_string(out.duality_gap) + " exceeds target");
    }
    if (value < lower - kFeasibilityTolerance || value > upper + kFeasibilityTolerance) {
        throw SolverFailure("matrix game value outside the bounds certified by its strategies");
    }
    return out;
}

}  // namespace detail

DominanceResult dominance_margin(const Eigen::Ref<const Eigen::RowVectorXd>& pi_row, const PayoffTable& table) {
    if (table.rows() == 0) throw ValidationError("dominance_margin needs a non-empty class");
    if (pi_row.size() != table.cols()) throw ValidationError("policy row does not match the payoff table columns");
    const Eigen::MatrixXd diff = (-table).rowwise() + pi_row;
    GameSolution sol = solve_matrix_game(diff, Orientation::row_min);
    return {sol.value, MetaPolicy(sol.row_mix)};
}

AdaptiveAttack optimal_adaptive_attack(const PayoffTable& table, std::span<const PureAttacker> attackers) {
    if (table.rows() == 0) throw ValidationError("optimal_adaptive_attack needs a non-empty class");
    if (static_cast<std::size_t>(table.cols()) != attackers.size()) {
        throw ValidationError("payoff table columns do not match the attacker list");
    }
    GameSolution sol = solve_matrix_game(table, Orientation::row_max);

    std::vector<PureAttacker> support;
    std::vector<double> weights;
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
        if (sol.col_mix(j) > 0.0) {
            support.push_back(attackers[static_cast<std::size_t>(j)]);
            weights.push_back(sol.col_mix(j));
        }
    }
    Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    w /= w.sum();

    AdaptiveAttack out{MixedAttacker(std::move(support), w), sol.col_mix, sol.value,
                       table.rowwise().minCoeff().maxCoeff(), table.colwise().maxCoeff().minCoeff()};
    return out;
}

GapCertificate certify_gap_pure(const PayoffTable& table, std::span<const double> br_values) {
    if (static_cast<std::size_t>(table.cols()) != br_values.size()) {
        throw ValidationError("best-response values do not match the payoff table columns");
    }
    if (br_values.empty()) throw ValidationError("certify_gap_pure needs at least one attacker");
    GapCertificate best{-std::numeric_limits<double>::infinity(), -1};
    for (std::size_t j = 0; j < br_values.size(); ++j) {
        const double class_value = table.rows() == 0 ? 0.0 : table.col(static_cast<Eigen::Index>(j)).maxCoeff();
        const double gap = br_values[j] - class_value;
        if (gap > best.gap) best = {gap, static_cast<int>(j)};
    }
    return best;
}

double estimate_gap_mixed(const TabularMdp& mdp, const PayoffTable& table, std::span<const PureAttacker> attackers,
                          double resolution, std::size_t node_cap) {
    const std::size_t n = attackers.size();
    if (n > kMaxGridAttackers) {
        throw UnsupportedScale("mixed-gap grid supports at most " + std::to_string(kMaxGridAttackers) +
                               " pure attackers, got " + std::to_string(n));
    }
    if (n == 0 || static_cast<std::size_t>(table.cols()) != n) {
        throw ValidationError("payoff table columns do not match the attacker list");
    }
    if (!(resolution > 0.0) || resolution > 1.0) throw ValidationError("resolution must lie in (0, 1]");
    const double steps_real = 1.0 / resolution;
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9) {
        throw ValidationError("resolution must divide 1 evenly");
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<long> parts(n, 0);
    auto visit = [&] {
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        std::vector<PureAttacker> support;
        std::vector<double> sw;
        for (std::size_t j = 0; j < n; ++j) {
            w(static_cast<Eigen::Index>(j)) = static_cast<double>(parts[j]) / static_cast<double>(steps);
            if (parts[j] > 0) {
                support.push_back(attackers[j]);
                sw.push_back(w(static_cast<Eigen::Index>(j)));
            }
        }
        Eigen::VectorXd swv = Eigen::Map<Eigen::VectorXd>(sw.data(), static_cast<Eigen::Index>(sw.size()));
        swv /= swv.sum();
        const double br = best_response_value(mdp, MixedAttacker(std::move(support), swv), node_cap);
        const double class_value = table.rows() == 0 ? 0.0 : (table * w).maxCoeff();
        best = std::max(best, br - class_value);
    };
    // Compositions of `steps` into n non-negative parts.
    auto rec = [&](auto&& self, std::size_t pos, long remaining) -> void {
        if (pos + 1 == n) {
            parts[pos] = remaining;
            visit();
            return;
        }
        for (long k = remaining; k >= 0; --k) {
            parts[pos] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    rec(rec, 0, steps);
    return best;
}

}  // namespace advrl
