#pragma once

#include <functional>
#include <vector>

#include "plateflow/errors.hpp"
#include "plateflow/grid.hpp"

namespace plateflow {

using Sampler = std::function<double(const Point&)>;

/**
 * Obstacle f and initial state u0 on a grid.
 *
 * Invariants established by the factories: f < 0 at every boundary node,
 * u0 >= f at every interior node, and all values finite.
 */
class ObstacleProblem {
public:
    /// Samples f at every node and u0 at interior nodes, then validates.
    static ObstacleProblem build(const Grid& g, const Sampler& f, const Sampler& u0);

    /// `f_boundary` lists the obstacle at boundary nodes in extended
    /// lexicographic order.
    static ObstacleProblem from_values(const Grid& g, Field f_interior,
                                       std::vector<double> f_boundary, Field u0);

    const Grid& grid() const { return grid_; }
    const Field& obstacle() const { return f_interior_; }
    const std::vector<double>& obstacle_boundary() const { return f_boundary_; }
    const Field& initial() const { return u0_; }

    /// Re-checks the invariants; throws the matching ProblemError.
    void validate() const;

private:
    ObstacleProblem(Grid g, Field f, std::vector<double> fb, Field u0)
        : grid_(std::move(g)), f_interior_(std::move(f)), f_boundary_(std::move(fb)), u0_(std::move(u0)) {}

    Grid grid_;
    Field f_interior_;
    std::vector<double> f_boundary_;
    Field u0_;
};

/// Number of boundary nodes of `g`.
Index boundary_size(const Grid& g);

}  // namespace plateflow
