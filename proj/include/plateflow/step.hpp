#pragma once

#include <functional>
#include <string>
#include <vector>

#include "plateflow/errors.hpp"
#include "plateflow/grid.hpp"
#include "plateflow/qp.hpp"

namespace plateflow {

enum class StepStrategy { PenaltyThenPolish, ActiveSet, PenaltyOnly };

std::string to_string(StepStrategy s);
/// Accepts "penalty_then_polish", "active_set", "penalty_only".
StepStrategy parse_strategy(const std::string& name);

std::vector<double> default_penalty_schedule();

struct StepConfig {
    double tau = 1.0;
    std::vector<double> penalty_eps_schedule = default_penalty_schedule();
    double newton_tol = 1e-10;
    int max_newton_iters = 100;
    StepStrategy solver = StepStrategy::PenaltyThenPolish;
    long fallback_pg_iters = 100000;

    /// Throws std::invalid_argument on tau <= 0, a schedule that is empty,
    /// non-positive or not strictly decreasing, or non-positive tolerances.
    void validate() const;
};

/// State of the penalized minimizer at one value of epsilon.
struct PenaltyRecord {
    double eps = 0.0;
    int newton_iterations = 0;
    /// Inserted between two scheduled values after a Newton failure.
    bool inserted = false;
    /// sqrt(quad_weight * sum ((w - f)^-)^2)
    double violation_l2 = 0.0;
    double violation_sup = 0.0;
    /// quad_weight * sum gamma_eps(w - f)
    double penalty = 0.0;
    double energy = 0.0;
    /// quad_weight / (2 tau) * |w - u_prev|^2
    double proximal = 0.0;
};

struct SolverTelemetry {
    int newton_iterations = 0;
    long active_set_iterations = 0;
    long projected_gradient_iterations = 0;
    bool used_fallback = false;
    int eps_insertions = 0;
    double kkt_residual = 0.0;
};

struct StepResult {
    Field u;
    Field v;
    /// Nodal density of the contact measure, B u + v.
    Field mu;
    double energy = 0.0;
    std::vector<PenaltyRecord> penalty_profile;
    SolverTelemetry iterations;
    NodeMask active_set;
    double contact_tol = 0.0;
    double mu_tol = 0.0;
};

/// 1e-9 (1 + |f|_sup).
double contact_tolerance(const Field& f);
/// 1e-8 (1 + |mu|_sup).
double measure_tolerance(const Field& mu);

/// gamma_eps(s) = s^2 / eps for s < 0, else 0.
double penalty_gamma(double s, double eps);
/// beta_eps = gamma_eps'.
double penalty_beta(double s, double eps);

struct PenaltySolve {
    Field w;
    int iterations = 0;
    /// |F(w)|_sup divided by the convergence scale.
    double scaled_residual = 0.0;
};

/**
 * Minimizer of the penalized step functional
 *
 *     E_h(w) + qw/(2 tau) |w - u_prev|^2 + qw * sum gamma_eps(w - f)
 *
 * by semismooth Newton on B w + (w - u_prev)/tau + beta_eps(w - f) = 0,
 * globalized by backtracking on the (convex) functional. Starts from
 * `warm_start` when given, otherwise from u_prev. Throws NoConvergence after
 * cfg.max_newton_iters iterations.
 */
PenaltySolve solve_step_penalty(const Grid& g, const Field& u_prev, const Field& f, double tau, double eps,
                                const StepConfig& cfg, const Field* warm_start = nullptr);

/// Fills a PenaltyRecord for the penalized minimizer w at this eps.
PenaltyRecord penalty_record(const Grid& g, const Field& w, const Field& u_prev, const Field& f, double tau,
                             double eps, int iterations, bool inserted);

using PenaltyVisitor = std::function<void(const PenaltyRecord&, const Field&)>;

/**
 * Penalized minimizers for each eps of cfg.penalty_eps_schedule, each warm
 * started from the previous one. A Newton failure at some eps inserts the
 * geometric mean of the last converged value and the target (up to eight
 * levels deep). `visit` sees every converged record and iterate; returns the
 * iterate at the last eps.
 */
Field penalty_continuation(const Grid& g, const Field& u_prev, const Field& f, const StepConfig& cfg,
                           std::vector<PenaltyRecord>& profile, SolverTelemetry& telemetry,
                           const PenaltyVisitor& visit = {});

struct ActiveSetStep {
    Field u;
    NodeMask active_set;
    Field multipliers;
    SolverTelemetry telemetry;
};

/// Exact minimizer over u >= f of E_h(u) + qw/(2 tau) |u - u_prev|^2.
ActiveSetStep solve_step_active_set(const Grid& g, const Field& u_prev, const Field& f, double tau,
                                    const StepConfig& cfg, const NodeMask* initial_active = nullptr);

/// H = qw (B + I / tau), the Hessian of the step functional.
SparseMatrix step_hessian(const Grid& g, double tau);

/// E_h(u) + qw/(2 tau) |u - u_prev|^2.
double step_functional(const Grid& g, const Field& u, const Field& u_prev, double tau);

/**
 * One implicit step with the configured strategy. Fills velocity, measure
 * density and contact set, and throws DescentViolation if the step
 * functional at the result exceeds its value at u_prev.
 */
StepResult solve_step(const Grid& g, const Field& u_prev, const Field& f, const StepConfig& cfg);

struct MeasureMass {
    double mass = 0.0;
    /// Largest clamped negative entry, as a positive number.
    double negativity = 0.0;
};

/// quad_weight * sum max(mu, 0).
MeasureMass measure_mass(const Grid& g, const Field& mu);

}  // namespace plateflow
