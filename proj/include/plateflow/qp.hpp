#pragma once

#include <memory>
#include <vector>

#include "plateflow/grid.hpp"

namespace plateflow {

/// Active flags, one per unknown.
using NodeMask = std::vector<bool>;

/**
 * Repeated solves of (H + diag(shift)) x = rhs with selected components of x
 * pinned to given values. The sparsity pattern of H (which must include the
 * full diagonal) is analysed once; each solve only refactorizes.
 */
class PinnedSpdSolver {
public:
    explicit PinnedSpdSolver(const SparseMatrix& H);

    /// `shift` may be empty (no diagonal shift).
    Field solve(const NodeMask& pinned, const Field& pinned_values, const Field& rhs,
                const Field& shift = Field());

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

struct BoundQpOptions {
    long max_active_set_iters = 500;
    long max_pg_iters = 100000;
    /// Relative projected-gradient stopping tolerance of the fallback.
    double pg_tol = 1e-14;
};

struct BoundQpResult {
    Field x;
    Field multipliers;
    NodeMask active;
    long active_set_iterations = 0;
    long pg_iterations = 0;
    bool used_fallback = false;
    double kkt_residual = 0.0;
};

/// Reference magnitude used to make KKT residuals dimensionless.
double kkt_scale(const SparseMatrix& H, const Field& b, const Field& x);

/**
 * Scaled KKT residual of (x, lambda) for min 1/2 x'Hx - b'x s.t. x >= lower:
 * the largest of primal infeasibility, dual infeasibility, stationarity
 * |Hx - b - lambda| and complementarity |lambda (x - lower)|, each divided by
 * its natural scale.
 */
double kkt_residual(const SparseMatrix& H, const Field& b, const Field& lower, const Field& x,
                    const Field& lambda);

/**
 * Exact minimizer of the bound-constrained SPD quadratic program
 *
 *     min 1/2 x'Hx - b'x   subject to   x >= lower
 *
 * by primal-dual active set iteration. A revisited active set (cycle) or an
 * exhausted iteration budget switches to accelerated projected gradient with
 * adaptive restart, after which the active set iteration is retried from
 * the projected-gradient contact set. Throws NoConvergence once the
 * projected-gradient budget is spent without meeting the KKT tolerance.
 */
BoundQpResult solve_bound_qp(const SparseMatrix& H, const Field& b, const Field& lower,
                             const BoundQpOptions& opts, const NodeMask* initial_active = nullptr);

/// Row-sum bound on the spectral radius of a symmetric matrix.
double row_sum_norm(const SparseMatrix& H);

}  // namespace plateflow
