#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plateflow/flow.hpp"

namespace plateflow {

/// One checked inequality: passed iff observed <= bound * (1 + tolerance).
struct CheckReport {
    std::string name;
    double bound = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    /// (bound - observed) / max(1, |bound|); 1 for a vacuous 0 <= 0 check.
    double margin = 0.0;
    bool passed = false;
    std::string details;
};

CheckReport make_check(std::string name, double bound, double observed, double tolerance,
                       std::string details = {});

/// Pass flag recomputed from the report's own numbers.
bool recompute_passed(const CheckReport& r);

bool all_passed(const std::vector<CheckReport>& reports);

/**
 * Every discrete inequality of the scheme as a named check:
 * energy_monotone, step_descent, dissipation, laplacian_bound, feasibility,
 * measure_positivity, measure_support, complementarity, mass_refinement,
 * holder_l2, interpolant_gap and, in 1D, holder_grad_1d.
 *
 * Checks that only hold up to round-off (energy_monotone, step_descent,
 * feasibility and the three measure checks) report the violation in units
 * of their tolerance against a bound of 1.
 *
 * mass_refinement compares tau * sum mu_i(Omega)^2 against the same run
 * with 2n steps; `refined` supplies that run, otherwise it is computed.
 */
std::vector<CheckReport> run_invariant_suite(const Trajectory& tr, const Trajectory* refined = nullptr);

/// sup over step endpoints of |u_lin(t) - u_const(t)|^2_L2.
double interpolant_gap(const Trajectory& tr);

/// max over i >= 1 of |L u_i| in the extended quadrature norm.
double max_laplacian_norm(const Trajectory& tr);

struct HolderModuli {
    /// max |u(t2) - u(t1)|_L2 / (t2 - t1)^(1/2)
    double l2_quotient = 0.0;
    /// 1D only: max |D(u(t2) - u(t1))|_inf / (t2 - t1)^(1/8), D the forward difference
    std::optional<double> grad_sup_quotient_1d;
    /// max |u(t2) - u(t1)|_inf / (t2 - t1)^sup_exponent
    double sup_quotient = 0.0;
    /// 1/2 - N/8
    double sup_exponent = 0.0;

    /// Least-squares slopes of log |difference| against log (t2 - t1); NaN
    /// when every difference vanishes.
    struct {
        double l2 = 0.0;
        double grad_sup_1d = 0.0;
        double sup = 0.0;
    } empirical_exponents;
};

/// Quotients over all pairs of step endpoints of the linear interpolant.
HolderModuli holder_moduli(const Trajectory& tr);

/// Throws std::invalid_argument unless the trajectory is one-dimensional.
double grad_sup_quotient_1d(const Trajectory& tr);

struct EllipticSolution {
    Field u;
    Field multipliers;
    NodeMask active_set;
    double kkt_residual = 0.0;
    long active_set_iterations = 0;
    bool used_fallback = false;
};

/// Exact minimizer of E_h over {u >= f}, the steady state of the flow.
EllipticSolution solve_elliptic_obstacle(const ObstacleProblem& p, const StepConfig& cfg);

struct WeakFormResidual {
    double value = 0.0;
    /// Sum of the absolute values of the integrand terms.
    double scale = 0.0;
};

/**
 * Time quadrature of sum_j qw [ V (w - u~) + (L u~)(L w - L u~) ] with the
 * piecewise constant interpolant u~, one term per step. `test[i-1]` is the
 * test function on step i. Throws ObstacleViolation when a test function
 * lies below the obstacle by more than the contact tolerance.
 */
WeakFormResidual weak_form_residual(const Trajectory& tr, const std::vector<Field>& test);

}  // namespace plateflow
