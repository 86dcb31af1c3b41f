#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "plateflow/problem.hpp"

using namespace plateflow;

namespace {

Sampler constant(double c)
{
    return [c](const Point&) { return c; };
}

}  // namespace

TEST_CASE("constant obstacle below a zero datum is valid")
{
    for (const Grid& g : {Grid::build(1, {1.0}, {5}), Grid::build(2, {1.0, 2.0}, {3, 4})}) {
        const ObstacleProblem p = ObstacleProblem::build(g, constant(-1.0), constant(0.0));
        CHECK(p.obstacle().size() == g.interior_size());
        CHECK(static_cast<Index>(p.obstacle_boundary().size()) == boundary_size(g));
        CHECK(p.initial().cwiseAbs().maxCoeff() == 0.0);
        for (double v : p.obstacle_boundary())
            CHECK(v < 0.0);
        CHECK((p.initial() - p.obstacle()).minCoeff() >= 0.0);
        CHECK_NOTHROW(p.validate());
        CHECK_NOTHROW(p.validate());
    }
}

TEST_CASE("obstacle nonnegative on the boundary is rejected")
{
    const Grid g = Grid::build(1, {1.0}, {3});
    CHECK_THROWS_AS(ObstacleProblem::build(g, constant(0.5), constant(1.0)), BoundarySignError);
    CHECK_THROWS_AS(ObstacleProblem::build(g, constant(0.0), constant(1.0)), BoundarySignError);
    // only the right end touches zero
    CHECK_THROWS_AS(ObstacleProblem::build(g, [](const Point& x) { return x[0] - 1.0; }, constant(1.0)),
                    BoundarySignError);
}

TEST_CASE("initial datum below the obstacle is rejected")
{
    const Grid g = Grid::build(2, {1.0, 1.0}, {3, 3});
    CHECK_THROWS_AS(ObstacleProblem::build(g, constant(-1.0), constant(-2.0)), ObstacleViolation);
}

TEST_CASE("non-finite samples are rejected")
{
    const Grid g = Grid::build(1, {1.0}, {3});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ObstacleProblem::build(g, constant(-1.0), constant(nan)), NonFiniteError);
    CHECK_THROWS_AS(ObstacleProblem::build(g, [&](const Point& x) { return x[0] == 0.5 ? nan : -1.0; }, constant(0.0)),
                    NonFiniteError);
}

TEST_CASE("from_values checks sizes and invariants")
{
    const Grid g = Grid::build(1, {1.0}, {2});
    Field f(2), u0(2);
    f << -1.0, 0.3;
    u0 << 0.0, 0.3;
    CHECK_NOTHROW(ObstacleProblem::from_values(g, f, {-0.1, -0.1}, u0));
    CHECK_THROWS_AS(ObstacleProblem::from_values(g, f, {-0.1}, u0), ProblemError);
    CHECK_THROWS_AS(ObstacleProblem::from_values(g, f, {-0.1, 0.0}, u0), BoundarySignError);
    u0[1] = 0.2;
    CHECK_THROWS_AS(ObstacleProblem::from_values(g, f, {-0.1, -0.1}, u0), ObstacleViolation);
    CHECK_THROWS_AS(ObstacleProblem::from_values(g, Field::Zero(3), {-0.1, -0.1}, u0), std::invalid_argument);
}
