#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "advrl/eval.hpp"
#include "advrl/mdp.hpp"
#include "advrl/simplex.hpp"

namespace advrl {

inline constexpr double kDualityGapTarget = 1e-8;
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Which side the row player is on.
enum class Orientation { row_min, row_max };

struct GameSolution {
    Eigen::VectorXd row_mix;
    Eigen::VectorXd col_mix;
    double value;
    double duality_gap;  // max_i (M q)_i - min_j (p' M)_j for the returned mixes
};

namespace detail {
using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
GameSolution solve_row_max(const LongMatrix& payoff);
}  // namespace detail

/**
 * Saddle point of the zero-sum game with payoff matrix M. With row_max the
 * row player maximizes x'My and the column player minimizes it; row_min
 * swaps the roles. Throws EmptyMatrix, NonFiniteEntry, or SolverFailure
 * when the duality gap of the returned mixes exceeds 1e-8.
 */
template <typename Derived>
GameSolution solve_matrix_game(const Eigen::MatrixBase<Derived>& payoff, Orientation orientation) {
    if (payoff.rows() == 0 || payoff.cols() == 0) throw EmptyMatrix();
    for (Eigen::Index i = 0; i < payoff.rows(); ++i) {
        for (Eigen::Index j = 0; j < payoff.cols(); ++j) {
            if (!std::isfinite(static_cast<double>(payoff(i, j)))) throw NonFiniteEntry(i, j);
        }
    }
    detail::LongMatrix m = payoff.template cast<long double>();
    if (orientation == Orientation::row_max) return detail::solve_row_max(m);
    GameSolution flipped = detail::solve_row_max(-m);
    flipped.value = -flipped.value;
    return flipped;
}

struct DominanceResult {
    double margin;
    MetaPolicy omega;
};

/**
 * min over omega in the simplex of max_j (pi_row[j] - sum_i omega_i table(i, j)).
 * The inner max over mixed attackers is attained at a pure column because
 * the objective is linear in the attacker mixture, so columns suffice.
 * A policy is (delta, class)-dominated iff margin <= delta.
 */
DominanceResult dominance_margin(const Eigen::Ref<const Eigen::RowVectorXd>& pi_row, const PayoffTable& table);

struct AdaptiveAttack {
    MixedAttacker attacker;
    Eigen::VectorXd column_weights;  // weight per canonical attacker id
    double value;                    // what the adaptive victim can guarantee
    double best_static_worst_case;   // max_i min_j table(i, j)
    double pointwise_worst_case;     // min_j max_i table(i, j)
};

/// Attacker mixture minimizing max_i sum_j nu_j table(i, j).
AdaptiveAttack optimal_adaptive_attack(const PayoffTable& table, std::span<const PureAttacker> attackers);

struct GapCertificate {
    double gap;
    int witness_attacker_id;
};

/**
 * max_j (br_values[j] - max_i table(i, j)), witness lowest on ties. Over
 * pure attackers this is a certified lower bound on Gap(class, all
 * policies). An empty class counts as value 0 in every column.
 */
GapCertificate certify_gap_pure(const PayoffTable& table, std::span<const double> br_values);

/// Grid size of estimate_gap_mixed() is limited to this many pure attackers.
inline constexpr std::size_t kMaxGridAttackers = 6;

/**
 * Lower bound on the Gap over mixed attackers by evaluating it on every
 * point of the attacker simplex with spacing `resolution`. Throws
 * UnsupportedScale for more than six pure attackers.
 */
double estimate_gap_mixed(const TabularMdp& mdp, const PayoffTable& table, std::span<const PureAttacker> attackers,
                          double resolution, std::size_t node_cap = kDefaultNodeCap);

}  // namespace advrl
