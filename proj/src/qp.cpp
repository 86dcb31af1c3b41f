#include "plateflow/qp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SparseCholesky>

#include "plateflow/errors.hpp"

namespace plateflow {

struct PinnedSpdSolver::Impl {
    SparseMatrix H;
    SparseMatrix work;
    Eigen::VectorXd diag;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

PinnedSpdSolver::PinnedSpdSolver(const SparseMatrix& H) : impl_(std::make_shared<Impl>())
{
    impl_->H = H;
    impl_->H.makeCompressed();
    impl_->work = impl_->H;
    impl_->diag = impl_->H.diagonal();
    impl_->ldlt.analyzePattern(impl_->work);
}

Field PinnedSpdSolver::solve(const NodeMask& pinned, const Field& pinned_values, const Field& rhs,
                             const Field& shift)
{
    const SparseMatrix& H = impl_->H;
    SparseMatrix& M = impl_->work;
    const Index n = H.rows();
    Field r = rhs;
    const bool shifted = shift.size() == n;

    for (Index c = 0; c < H.outerSize(); ++c) {
        SparseMatrix::InnerIterator src(H, c);
        SparseMatrix::InnerIterator dst(M, c);
        for (; src; ++src, ++dst) {
            const Index row = src.row();
            if (pinned[row] || pinned[c]) {
                if (!pinned[row] && pinned[c])
                    r[row] -= src.value() * pinned_values[c];
                dst.valueRef() = row == c ? impl_->diag[c] : 0.0;
            } else {
                dst.valueRef() = src.value() + (row == c && shifted ? shift[row] : 0.0);
            }
        }
    }
    for (Index j = 0; j < n; ++j)
        if (pinned[j])
            r[j] = impl_->diag[j] * pinned_values[j];

    impl_->ldlt.factorize(M);
    if (impl_->ldlt.info() != Eigen::Success)
        throw SolverError("sparse LDL^T factorization failed");
    Field x = impl_->ldlt.solve(r);
    for (Index j = 0; j < n; ++j)
        if (pinned[j])
            x[j] = pinned_values[j];
    return x;
}

double row_sum_norm(const SparseMatrix& H)
{
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(H.rows());
    for (Index c = 0; c < H.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(H, c); it; ++it)
            rows[it.row()] += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
}

namespace {

double sup(const Field& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

double kkt_scale(const SparseMatrix& H, const Field& b, const Field& x)
{
    return row_sum_norm(H) * std::max(1.0, sup(x)) + sup(b);
}

double kkt_residual(const SparseMatrix& H, const Field& b, const Field& lower, const Field& x,
                    const Field& lambda)
{
    const double scale = kkt_scale(H, b, x);
    const Field gap = x - lower;
    const Field stationarity = H * x - b - lambda;

    double primal = 0.0, dual = 0.0, comp = 0.0;
    double gap_scale = 1.0;
    for (Index j = 0; j < x.size(); ++j) {
        primal = std::max(primal, -gap[j]);
        dual = std::max(dual, -lambda[j]);
        if (lambda[j] != 0.0)
            gap_scale = std::max(gap_scale, std::abs(gap[j]));
    }
    for (Index j = 0; j < x.size(); ++j)
        comp = std::max(comp, std::abs(lambda[j] * gap[j]));

    const double xs = std::max(1.0, sup(x));
    return std::max({primal / xs, dual / scale, sup(stationarity) / scale, comp / (scale * gap_scale)});
}

namespace {

struct ActiveSetOutcome {
    bool converged = false;
    long iterations = 0;
    Field x;
    Field lambda;
    NodeMask active;
};

ActiveSetOutcome primal_dual_active_set(PinnedSpdSolver& solver, const SparseMatrix& H, const Field& b,
                                        const Field& lower, NodeMask active, long max_iters)
{
    const Index n = b.size();
    std::set<NodeMask> visited;
    ActiveSetOutcome out;

    const double hnorm = row_sum_norm(H);

    for (long k = 0; k < max_iters; ++k) {
        out.iterations = k + 1;
        visited.insert(active);
        const Field x = solver.solve(active, lower, b);
        const Field r = H * x - b;
        out.x = x;

        const double xs = std::max(1.0, sup(x));
        const double tol_x = 1e-14 * xs;
        const double tol_lambda = 1e-14 * (hnorm * xs + sup(b));

        NodeMask next(static_cast<std::size_t>(n));
        for (Index j = 0; j < n; ++j) {
            if (active[j])
                next[j] = r[j] > -tol_lambda;
            else
                next[j] = x[j] < lower[j] - tol_x;
        }

        if (next == active) {
            out.converged = true;
            out.lambda = Field::Zero(n);
            for (Index j = 0; j < n; ++j) {
                if (active[j])
                    out.lambda[j] = std::max(r[j], 0.0);
                else
                    out.x[j] = std::max(x[j], lower[j]);
            }
            out.active = std::move(active);
            return out;
        }
        if (visited.count(next))
            break;
        active = std::move(next);
    }
    return out;
}

Field accelerated_projected_gradient(const SparseMatrix& H, const Field& b, const Field& lower, Field x0,
                                     long max_iters, double tol, long& iterations, bool& converged)
{
    const double lip = row_sum_norm(H);
    auto project = [&](const Field& v) { return v.cwiseMax(lower); };

    Field x = project(x0);
    Field y = x;
    double t = 1.0;
    converged = false;
    iterations = 0;
    for (long k = 0; k < max_iters; ++k) {
        iterations = k + 1;
        const Field g = H * y - b;
        const Field x_next = project(y - g / lip);
        // gradient-based adaptive restart
        if ((y - x_next).dot(x_next - x) > 0.0) {
            t = 1.0;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_next + ((t - 1.0) / t_next) * (x_next - x);
        x = x_next;
        t = t_next;

        if (k % 10 == 9) {
            const Field step = x - project(x - (H * x - b) / lip);
            if (lip * sup(step) <= tol * kkt_scale(H, b, x)) {
                converged = true;
                break;
            }
        }
    }
    return x;
}

}  // namespace

BoundQpResult solve_bound_qp(const SparseMatrix& H, const Field& b, const Field& lower,
                             const BoundQpOptions& opts, const NodeMask* initial_active)
{
    const Index n = b.size();
    PinnedSpdSolver solver(H);
    NodeMask start = initial_active ? *initial_active : NodeMask(static_cast<std::size_t>(n), false);

    BoundQpResult result;
    ActiveSetOutcome outcome =
        primal_dual_active_set(solver, H, b, lower, std::move(start), opts.max_active_set_iters);
    result.active_set_iterations = outcome.iterations;

    if (!outcome.converged) {
        result.used_fallback = true;
        bool pg_converged = false;
        Field guess = outcome.x.size() == n ? outcome.x : lower.cwiseMax(0.0);
        Field x = accelerated_projected_gradient(H, b, lower, guess, opts.max_pg_iters, opts.pg_tol,
                                                 result.pg_iterations, pg_converged);

        const double xs = std::max(1.0, sup(x));
        NodeMask contact(static_cast<std::size_t>(n));
        for (Index j = 0; j < n; ++j)
            contact[j] = x[j] - lower[j] <= 1e-10 * xs;
        outcome = primal_dual_active_set(solver, H, b, lower, contact, opts.max_active_set_iters);
        result.active_set_iterations += outcome.iterations;

        if (!outcome.converged) {
            Field lambda = Field::Zero(n);
            const Field r = H * x - b;
            for (Index j = 0; j < n; ++j)
                if (contact[j])
                    lambda[j] = std::max(r[j], 0.0);
            const double kkt = kkt_residual(H, b, lower, x, lambda);
            if (!pg_converged || kkt > 1e-10)
                throw NoConvergence("bound-constrained QP: projected gradient did not converge", result.pg_iterations);
            outcome.x = x;
            outcome.lambda = lambda;
            outcome.active = contact;
        }
    }

    result.x = std::move(outcome.x);
    result.multipliers = std::move(outcome.lambda);
    result.active = std::move(outcome.active);
    result.kkt_residual = kkt_residual(H, b, lower, result.x, result.multipliers);
    return result;
}

}  // namespace plateflow
