#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "plateflow/flow.hpp"
#include "random_problems.hpp"

using namespace plateflow;

namespace {

Sampler constant(double c)
{
    return [c](const Point&) { return c; };
}

ObstacleProblem one_node_contact()
{
    return ObstacleProblem::from_values(Grid::build(1, {1.0}, {1}), Field::Constant(1, 0.5), {-0.1, -0.1},
                                        Field::Constant(1, 1.0));
}

ObstacleProblem bump_problem(Index m)
{
    const Grid g = Grid::build(1, {1.0}, {m});
    return ObstacleProblem::build(
        g,
        [](const Point& x) {
            const double d = x[0] - 0.5;
            return 2.0 * std::exp(-d * d / 0.01) - 0.5;
        },
        [](const Point& x) {
            const double d = x[0] - 0.5;
            return 3.0 * std::exp(-d * d / 0.04);
        });
}

double golden_section(const std::function<double(double)>& fn, double lo, double hi)
{
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int k = 0; k < 300; ++k) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        if (fn(c) < fn(d))
            b = d;
        else
            a = c;
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("trivial flow stays at zero")
{
    const Grid g = Grid::build(2, {1.0, 1.0}, {4, 4});
    const ObstacleProblem p = ObstacleProblem::build(g, constant(-1.0), constant(0.0));
    const Trajectory tr = run_flow(p, 1.0, 10, StepConfig{});
    REQUIRE(tr.steps.size() == 11);
    CHECK(tr.tau == doctest::Approx(0.1));
    for (int i = 0; i <= 10; ++i) {
        CHECK(tr.state(i).cwiseAbs().maxCoeff() == 0.0);
        CHECK(tr.energies[i] == 0.0);
    }
    const TrajectoryAggregates agg = trajectory_aggregates(tr);
    CHECK(agg.dissipation == 0.0);
    CHECK(agg.mass_sq_sum == 0.0);
    CHECK(agg.w2inf_sum == 0.0);
}

TEST_CASE("one-node contact flow")
{
    const ObstacleProblem p = one_node_contact();
    REQUIRE(p.initial()[0] == 1.0);

    const Trajectory tr = run_flow(p, 2.0, 2, StepConfig{});
    CHECK(tr.state(1)[0] == doctest::Approx(0.5));
    CHECK(tr.state(2)[0] == doctest::Approx(0.5));
    // second step from u_prev = 0.5 by brute force over u >= 0.5
    const double oracle =
        golden_section([](double u) { return 48.0 * u * u + 0.25 * (u - 0.5) * (u - 0.5); }, 0.5, 5.0);
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-8));

    const Trajectory one = run_flow(p, 1.0, 1, StepConfig{});
    const TrajectoryAggregates agg = trajectory_aggregates(one);
    CHECK(agg.dissipation == doctest::Approx(0.125));
    CHECK(agg.mass_sq_sum == doctest::Approx(2280.0625));
    CHECK(agg.w2inf_sum == doctest::Approx(16.0));
    CHECK(agg.dissipation <= 2.0 * one.energies.front() * (1.0 + 1e-9));
}

TEST_CASE("run_flow rejects bad horizons and step counts")
{
    const ObstacleProblem p = one_node_contact();
    CHECK_THROWS_AS(run_flow(p, 0.0, 4, StepConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(run_flow(p, 1.0, 0, StepConfig{}), std::invalid_argument);
}

TEST_CASE("solver failures carry the step index")
{
    const ObstacleProblem p = bump_problem(31);
    StepConfig cfg;
    cfg.solver = StepStrategy::PenaltyOnly;
    cfg.max_newton_iters = 1;
    cfg.penalty_eps_schedule = {1e-12};
    try {
        (void)run_flow(p, 0.5, 4, cfg);
        FAIL("expected a step failure");
    } catch (const StepFailure& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("energies are nonincreasing and dissipation is bounded")
{
    std::mt19937 rng(17);
    for (int trial = 0; trial < 12; ++trial) {
        const ObstacleProblem p = trial == 0 ? bump_problem(31) : testing::random_problem(rng, 1 + trial % 2, 7);
        const Trajectory tr = run_flow(p, 0.2, 16, StepConfig{});
        const double e0 = tr.energies.front();
        for (int i = 1; i <= tr.n_steps; ++i) {
            CHECK(tr.energies[i] <= tr.energies[i - 1] + 1e-12 * std::max(1.0, e0));
            CHECK((tr.state(i) - p.obstacle()).minCoeff() >= -tr.steps[i].contact_tol);
        }
        CHECK(trajectory_aggregates(tr).dissipation <= 2.0 * e0 * (1.0 + 1e-9));
    }
}

TEST_CASE("interpolants")
{
    const Trajectory tr = run_flow(bump_problem(15), 0.4, 8, StepConfig{});
    const double tau = tr.tau;
    for (int i = 1; i <= tr.n_steps; ++i) {
        const Field mid = eval_interpolant(tr, (i - 0.5) * tau, Interpolant::Linear);
        CHECK((mid - 0.5 * (tr.state(i - 1) + tr.state(i))).cwiseAbs().maxCoeff() <= 1e-12);
        const Field c = eval_interpolant(tr, (i - 0.5) * tau, Interpolant::Constant);
        CHECK((c - tr.state(i)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((eval_interpolant(tr, 0.0, Interpolant::Constant) - tr.state(1)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((eval_interpolant(tr, 0.0, Interpolant::Linear) - tr.state(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((eval_interpolant(tr, 0.4, Interpolant::Linear) - tr.state(8)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((eval_interpolant(tr, 0.4, Interpolant::Constant) - tr.state(8)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(eval_interpolant(tr, -1e-9, Interpolant::Linear), std::out_of_range);
    CHECK_THROWS_AS(eval_interpolant(tr, 0.41, Interpolant::Constant), std::out_of_range);
}

TEST_CASE("refinement differences shrink as n doubles")
{
    const ObstacleProblem p = bump_problem(31);
    std::vector<Trajectory> runs;
    for (int n : {8, 16, 32, 64})
        runs.push_back(run_flow(p, 0.5, n, StepConfig{}));
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        double diff = 0.0;
        for (int i = 0; i <= 8; ++i) {
            const double t = 0.5 * i / 8.0;
            diff = std::max(diff, l2_norm(p.grid(), eval_interpolant(runs[k], t, Interpolant::Linear) -
                                                        eval_interpolant(runs[k + 1], t, Interpolant::Linear)));
        }
        CHECK(diff < prev);
        prev = diff;
    }
}
