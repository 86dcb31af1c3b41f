#include "plateflow/problem.hpp"

#include <cmath>
#include <sstream>

namespace plateflow {

Index boundary_size(const Grid& g)
{
    return g.extended_size() - g.interior_size();
}

ObstacleProblem ObstacleProblem::build(const Grid& g, const Sampler& f, const Sampler& u0)
{
    Field fi(g.interior_size());
    std::vector<double> fb;
    fb.reserve(static_cast<std::size_t>(boundary_size(g)));
    for (Index r = 0; r < g.extended_size(); ++r) {
        const MultiIndex j = g.extended_multi_index(r);
        const double value = f(g.coords(j));
        if (g.is_boundary(j))
            fb.push_back(value);
        else
            fi[g.interior_flat(j)] = value;
    }
    return from_values(g, std::move(fi), std::move(fb), sample_interior(g, u0));
}

ObstacleProblem ObstacleProblem::from_values(const Grid& g, Field f_interior,
                                             std::vector<double> f_boundary, Field u0)
{
    require_field(g, f_interior, "obstacle");
    require_field(g, u0, "initial datum");
    if (static_cast<Index>(f_boundary.size()) != boundary_size(g))
        throw ProblemError("obstacle boundary has " + std::to_string(f_boundary.size()) +
                           " values, grid has " + std::to_string(boundary_size(g)) +
                           " boundary nodes");
    ObstacleProblem p(g, std::move(f_interior), std::move(f_boundary), std::move(u0));
    p.validate();
    return p;
}

void ObstacleProblem::validate() const
{
    for (double v : f_boundary_)
        if (!std::isfinite(v))
            throw NonFiniteError("obstacle has a non-finite boundary value");
    if (!f_interior_.allFinite())
        throw NonFiniteError("obstacle has a non-finite interior value");
    if (!u0_.allFinite())
        throw NonFiniteError("initial datum has a non-finite value");

    Index b = 0;
    for (Index r = 0; r < grid_.extended_size(); ++r) {
        const MultiIndex j = grid_.extended_multi_index(r);
        if (!grid_.is_boundary(j))
            continue;
        const double v = f_boundary_[static_cast<std::size_t>(b++)];
        if (v >= 0.0) {
            const Point x = grid_.coords(j);
            std::ostringstream msg;
            msg << "obstacle must be negative on the boundary; f(" << x[0];
            if (grid_.dim() == 2)
                msg << ", " << x[1];
            msg << ") = " << v;
            throw BoundarySignError(msg.str());
        }
    }

    for (Index i = 0; i < u0_.size(); ++i) {
        if (u0_[i] < f_interior_[i]) {
            const Point x = grid_.interior_coords(i);
            std::ostringstream msg;
            msg << "initial datum below obstacle at (" << x[0];
            if (grid_.dim() == 2)
                msg << ", " << x[1];
            msg << "): u0 = " << u0_[i] << ", f = " << f_interior_[i];
            throw ObstacleViolation(msg.str());
        }
    }
}

}  // namespace plateflow
