#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "plateflow/errors.hpp"
#include "plateflow/qp.hpp"
#include "plateflow/step.hpp"
#include "random_problems.hpp"

using namespace plateflow;

TEST_CASE("pinned solve keeps pinned values and solves the free block")
{
    const Grid g = Grid::build(1, {1.0}, {6});
    const SparseMatrix H = step_hessian(g, 0.1);
    PinnedSpdSolver solver(H);
    NodeMask pinned{false, true, false, false, true, false};
    Field values = Field::Zero(6);
    values[1] = 0.3;
    values[4] = -0.7;
    Field rhs = Field::LinSpaced(6, 1.0, 2.0);
    const Field x = solver.solve(pinned, values, rhs);
    CHECK(x[1] == 0.3);
    CHECK(x[4] == -0.7);
    const Field r = H * x - rhs;
    for (Index j = 0; j < 6; ++j)
        if (!pinned[j])
            CHECK(std::abs(r[j]) <= 1e-10 * H.norm());
}

TEST_CASE("projected-gradient fallback reaches the active-set solution")
{
    std::mt19937 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const ObstacleProblem p = testing::random_problem(rng, 1 + trial % 2, 5);
        const double tau = 1e-2;
        const SparseMatrix H = step_hessian(p.grid(), tau);
        const Field b = p.grid().quad_weight() / tau * p.initial();

        const BoundQpResult exact = solve_bound_qp(H, b, p.obstacle(), BoundQpOptions{});
        CHECK_FALSE(exact.used_fallback);
        CHECK(exact.kkt_residual <= 1e-10);

        BoundQpOptions starved;
        starved.max_active_set_iters = 1;
        const BoundQpResult fb = solve_bound_qp(H, b, p.obstacle(), starved);
        if (fb.used_fallback) {
            CHECK(fb.pg_iterations > 0);
        }
        CHECK((fb.x - exact.x).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, exact.x.cwiseAbs().maxCoeff()));
        CHECK(fb.kkt_residual <= 1e-10);
    }
}

TEST_CASE("a starved solver either throws or returns a KKT point")
{
    std::mt19937 rng(4);
    int thrown = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const ObstacleProblem p = testing::random_problem(rng, 2, 5);
        const double tau = 1.0;
        const SparseMatrix H = step_hessian(p.grid(), tau);
        const Field b = p.grid().quad_weight() / tau * p.initial();
        BoundQpOptions opts;
        opts.max_active_set_iters = 1;
        opts.max_pg_iters = 1;
        try {
            const BoundQpResult r = solve_bound_qp(H, b, p.obstacle(), opts);
            CHECK(r.kkt_residual <= 1e-10);
        } catch (const NoConvergence& e) {
            CHECK(e.iterations() == 1);
            ++thrown;
        }
    }
    MESSAGE("starved solves that threw: " << thrown);
}

TEST_CASE("KKT residual flags each kind of violation")
{
    const Grid g = Grid::build(1, {1.0}, {1});
    const SparseMatrix H = step_hessian(g, 1.0);
    Field b(1), lower(1), x(1), lambda(1);
    b << 0.5;
    lower << 0.5;
    x << 0.5;
    // H = 0.5 * 193, stationarity: H x - b - lambda = 0
    lambda << 96.5 * 0.5 - 0.5;
    CHECK(kkt_residual(H, b, lower, x, lambda) <= 1e-14);
    Field bad = x;
    bad[0] = 0.4;
    CHECK(kkt_residual(H, b, lower, bad, lambda) > 1e-3);
    Field neg = lambda;
    neg[0] = -1.0;
    CHECK(kkt_residual(H, b, lower, x, neg) > 1e-3);
}
