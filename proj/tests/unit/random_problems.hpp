#pragma once

#include <random>

#include "plateflow/problem.hpp"

namespace plateflow::testing {

/// Small random obstacle problem: interior obstacle in [-1, 0.8], boundary
/// obstacle in [-1, -0.01], and an initial state at or above the obstacle
/// (exactly on it at roughly a fifth of the nodes).
inline ObstacleProblem random_problem(std::mt19937& rng, int dim, Index max_m)
{
    std::uniform_int_distribution<Index> count(1, max_m);
    std::uniform_real_distribution<double> length(0.5, 2.0);
    const Grid g = dim == 1 ? Grid::build(1, {length(rng)}, {count(rng)})
                            : Grid::build(2, {length(rng), length(rng)}, {count(rng), count(rng)});

    std::uniform_real_distribution<double> obstacle(-1.0, 0.8);
    std::uniform_real_distribution<double> boundary(-1.0, -0.01);
    std::uniform_real_distribution<double> lift(0.0, 1.5);
    std::bernoulli_distribution touch(0.2);

    Field f(g.interior_size()), u0(g.interior_size());
    for (Index i = 0; i < f.size(); ++i) {
        f[i] = obstacle(rng);
        u0[i] = touch(rng) ? f[i] : f[i] + lift(rng);
    }
    std::vector<double> fb(static_cast<std::size_t>(boundary_size(g)));
    for (double& v : fb)
        v = boundary(rng);
    return ObstacleProblem::from_values(g, std::move(f), std::move(fb), std::move(u0));
}

}  // namespace plateflow::testing
