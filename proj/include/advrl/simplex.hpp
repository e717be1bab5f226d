#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "advrl/errors.hpp"

namespace advrl {

template <typename Scalar>
struct PackingSolution {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> primal;  // y
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dual;    // u
    Scalar objective;
    int pivots;
};

// Packing LP  max 1'y  s.t.  A y <= 1, y >= 0  for a strictly positive A, by a
// dense tableau simplex from the slack basis. The entering column is the most
// negative reduced cost, falling back to Bland's rule after a run of
// degenerate pivots. The tableau is rebuilt from the original data through a
// fresh LU of the basis every few pivots and before accepting optimality.
// The dual u (min 1'u s.t. A'u >= 1) is read off the slack columns.
template <typename Scalar>
PackingSolution<Scalar> solve_packing_lp(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Tableau = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    const Eigen::Index rhs = n + m;
    const Scalar scale = std::max(Scalar(1), A.cwiseAbs().maxCoeff());
    const Scalar cost_tol = Scalar(1e-13);
    const Scalar pivot_tol = Scalar(1e-11) * scale;

    Matrix data = Matrix::Zero(m, n + m + 1);
    data.leftCols(n) = A;
    data.block(0, n, m, m).setIdentity();
    data.col(rhs).setOnes();

    Tableau tab = Tableau::Zero(m + 1, n + m + 1);
    tab.topRows(m) = data;
    tab.row(m).head(n).setConstant(Scalar(-1));

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    auto rebuild = [&] {
        Matrix b(m, m);
        for (Eigen::Index i = 0; i < m; ++i) b.col(i) = data.col(basis[static_cast<std::size_t>(i)]);
        const Eigen::PartialPivLU<Matrix> lu(b);
        tab.topRows(m) = lu.solve(data);
        Vector cb = Vector::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i) cb(i) = basis[static_cast<std::size_t>(i)] < n ? Scalar(1) : Scalar(0);
        tab.row(m) = cb.transpose() * tab.topRows(m);
        tab.row(m).head(n).array() -= Scalar(1);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index j = basis[static_cast<std::size_t>(i)];
            tab.col(j).setZero();
            tab(i, j) = Scalar(1);
            if (tab(i, rhs) < Scalar(0)) tab(i, rhs) = Scalar(0);
        }
    };

    const int max_pivots = static_cast<int>(50 * (m + n) + 1000);
    const int refresh_every = static_cast<int>(std::max<Eigen::Index>(50, m));
    const int degenerate_limit = static_cast<int>(std::max<Eigen::Index>(50, m));
    int pivots = 0;
    int since_refresh = 0;
    int degenerate_run = 0;
    bool fresh = true;
    for (;;) {
        if (pivots > max_pivots) throw SolverFailure("simplex exceeded its pivot budget");
        if (since_refresh >= refresh_every) {
            rebuild();
            since_refresh = 0;
            fresh = true;
        }
        const bool bland = degenerate_run >= degenerate_limit;
        Eigen::Index enter = -1;
        Scalar most = -cost_tol;
        for (Eigen::Index j = 0; j < n + m; ++j) {
            if (tab(m, j) < most) {
                enter = j;
                if (bland) break;
                most = tab(m, j);
            }
        }
        if (enter < 0) {
            if (fresh) break;
            rebuild();
            since_refresh = 0;
            fresh = true;
            continue;
        }

        Eigen::Index leave = -1;
        Scalar best_ratio = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const Scalar p = tab(i, enter);
            if (p <= pivot_tol) continue;
            const Scalar ratio = tab(i, rhs) / p;
            if (leave < 0 || ratio < best_ratio) {
                leave = i;
                best_ratio = ratio;
                continue;
            }
            if (ratio == best_ratio) {
                const bool better = bland ? basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]
                                          : p > tab(leave, enter);
                if (better) leave = i;
            }
        }
        if (leave < 0) throw SolverFailure("packing LP reported unbounded; matrix not positive?");

        degenerate_run = best_ratio <= Scalar(0) ? degenerate_run + 1 : 0;
        tab.row(leave) /= tab(leave, enter);
        const auto pivot_row = tab.row(leave);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const Scalar factor = tab(i, enter);
            if (factor != Scalar(0)) tab.row(i) -= factor * pivot_row;
        }
        tab.col(enter).setZero();
        tab(leave, enter) = Scalar(1);
        basis[static_cast<std::size_t>(leave)] = enter;
        ++pivots;
        ++since_refresh;
        fresh = false;
    }

    PackingSolution<Scalar> out;
    out.primal = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = basis[static_cast<std::size_t>(i)];
        if (j < n) out.primal(j) = tab(i, rhs);
    }
    out.dual = tab.row(m).segment(n, m).transpose();
    out.objective = tab(m, rhs);
    out.pivots = pivots;
    return out;
}

}  // namespace advrl
