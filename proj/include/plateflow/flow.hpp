#pragma once

#include <vector>

#include "plateflow/problem.hpp"
#include "plateflow/step.hpp"

namespace plateflow {

/**
 * Minimizing-movement trajectory u_0, u_1, ..., u_n on [0, T].
 *
 * steps[0] holds u_0 with empty velocity and measure; steps[i] for i >= 1 is
 * the result of the i-th implicit step with tau = T / n.
 */
struct Trajectory {
    ObstacleProblem problem;
    double horizon = 0.0;
    double tau = 0.0;
    int n_steps = 0;
    StepConfig config;
    std::vector<StepResult> steps;
    std::vector<double> energies;

    const Grid& grid() const { return problem.grid(); }
    const Field& state(int i) const { return steps[static_cast<std::size_t>(i)].u; }
    double time(int i) const { return horizon * static_cast<double>(i) / static_cast<double>(n_steps); }
};

/// Throws std::invalid_argument for T <= 0 or n < 1 and StepFailure when a
/// step solve fails. cfg.tau is overwritten with T / n.
Trajectory run_flow(const ObstacleProblem& p, double T, int n, StepConfig cfg);

enum class Interpolant { Linear, Constant };

/**
 * Linear: u_{i-1} + (t - (i-1) tau) V_i on [(i-1) tau, i tau].
 * Constant: u_i on [(i-1) tau, i tau), and u_n at t = T.
 */
Field eval_interpolant(const Trajectory& tr, double t, Interpolant kind);

struct TrajectoryAggregates {
    /// tau * sum |V_i|^2
    double dissipation = 0.0;
    /// tau * sum mu_i(Omega)^2
    double mass_sq_sum = 0.0;
    /// tau * sum |D^2 u_i|_inf^2 (axis-aligned second differences)
    double w2inf_sum = 0.0;
};

TrajectoryAggregates trajectory_aggregates(const Trajectory& tr);

}  // namespace plateflow
