#include "plateflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plateflow {

Trajectory run_flow(const ObstacleProblem& p, double T, int n, StepConfig cfg)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("horizon T must be positive");
    if (n < 1)
        throw std::invalid_argument("step count n must be >= 1");
    cfg.tau = T / static_cast<double>(n);
    cfg.validate();

    Trajectory tr{p, T, cfg.tau, n, cfg, {}, {}};
    tr.steps.reserve(static_cast<std::size_t>(n) + 1);
    tr.energies.reserve(static_cast<std::size_t>(n) + 1);

    StepResult initial;
    initial.u = p.initial();
    initial.energy = energy(p.grid(), initial.u);
    initial.contact_tol = contact_tolerance(p.obstacle());
    initial.active_set.resize(static_cast<std::size_t>(initial.u.size()));
    for (Index j = 0; j < initial.u.size(); ++j)
        initial.active_set[j] = initial.u[j] - p.obstacle()[j] <= initial.contact_tol;
    tr.energies.push_back(initial.energy);
    tr.steps.push_back(std::move(initial));

    for (int i = 1; i <= n; ++i) {
        try {
            StepResult s = solve_step(p.grid(), tr.steps.back().u, p.obstacle(), cfg);
            tr.energies.push_back(s.energy);
            tr.steps.push_back(std::move(s));
        } catch (const SolverError& e) {
            throw StepFailure(i, e.what());
        }
    }
    return tr;
}

Field eval_interpolant(const Trajectory& tr, double t, Interpolant kind)
{
    if (!(t >= 0.0 && t <= tr.horizon))
        throw std::out_of_range("interpolant time outside [0, T]");
    const int n = tr.n_steps;
    if (t == tr.horizon)
        return tr.state(n);

    int i = static_cast<int>(std::floor(t / tr.tau)) + 1;
    i = std::clamp(i, 1, n);
    if (kind == Interpolant::Constant)
        return tr.state(i);
    const double offset = t - static_cast<double>(i - 1) * tr.tau;
    return tr.state(i - 1) + offset * tr.steps[static_cast<std::size_t>(i)].v;
}

TrajectoryAggregates trajectory_aggregates(const Trajectory& tr)
{
    TrajectoryAggregates out;
    const Grid& g = tr.grid();
    for (int i = 1; i <= tr.n_steps; ++i) {
        const StepResult& s = tr.steps[static_cast<std::size_t>(i)];
        const double v = l2_norm(g, s.v);
        const double mass = measure_mass(g, s.mu).mass;
        const double d2 = weighted_norms(g, s.u).d2sup;
        out.dissipation += tr.tau * v * v;
        out.mass_sq_sum += tr.tau * mass * mass;
        out.w2inf_sum += tr.tau * d2 * d2;
    }
    return out;
}

}  // namespace plateflow
